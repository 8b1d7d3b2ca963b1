#include "sigmak/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sigmak::geometry {

using Eigen::MatrixXd;
using Eigen::VectorXd;

GraphJet make_jet(double u, VectorXd du, MatrixXd d2u, VectorXd x,
                  double spacelike_margin) {
  const int n = static_cast<int>(du.size());
  if (n < 1) throw std::invalid_argument("make_jet: empty gradient");
  if (d2u.rows() != n || d2u.cols() != n) {
    throw std::invalid_argument("make_jet: Hessian dimension mismatch");
  }
  if (!du.allFinite() || !d2u.allFinite() || !std::isfinite(u)) {
    throw std::invalid_argument("make_jet: non-finite jet data");
  }
  const double speed = du.norm();
  if (speed >= 1.0 - spacelike_margin) {
    throw SpacelikeViolation("make_jet: |Du| = " + std::to_string(speed) +
                             " violates the spacelike bound");
  }
  const double scale = 1.0 + d2u.cwiseAbs().maxCoeff();
  if ((d2u - d2u.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("make_jet: Hessian is not symmetric");
  }
  GraphJet jet;
  jet.u = u;
  jet.du = std::move(du);
  jet.d2u = 0.5 * (d2u + d2u.transpose()).eval();
  jet.x = std::move(x);
  return jet;
}

MatrixXd tilt_matrix(const VectorXd& du) {
  const int n = static_cast<int>(du.size());
  const double w = std::sqrt(1.0 - du.squaredNorm());
  return MatrixXd::Identity(n, n) + du * du.transpose() / (w * (1.0 + w));
}

MinkowskiFrame frame(const GraphJet& jet) {
  const int n = jet.n();
  MinkowskiFrame f;
  const double q = jet.du.squaredNorm();
  f.w = std::sqrt(1.0 - q);
  f.tilt = 1.0 / f.w;

  f.nu.resize(n + 1);
  f.nu.head(n) = jet.du / f.w;
  f.nu[n] = 1.0 / f.w;

  f.g = MatrixXd::Identity(n, n) - jet.du * jet.du.transpose();
  f.g_inv = MatrixXd::Identity(n, n) + jet.du * jet.du.transpose() / (f.w * f.w);
  f.h = jet.d2u / f.w;

  const MatrixXd gamma = tilt_matrix(jet.du);
  MatrixXd a = (gamma * jet.d2u * gamma) / f.w;
  a = 0.5 * (a + a.transpose()).eval();
  f.curvature = a;

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
  if (es.info() != Eigen::Success) {
    throw NumericError("frame: symmetric eigensolver failed to converge");
  }
  f.kappa = es.eigenvalues().reverse();  // descending
  return f;
}

MatrixXd curvature_matrix_alt(const GraphJet& jet) {
  const int n = jet.n();
  const double w = std::sqrt(1.0 - jet.du.squaredNorm());
  const MatrixXd m =
      MatrixXd::Identity(n, n) + jet.du * jet.du.transpose() / (w * w);
  return (m * jet.d2u) / w;
}

symfun::ConeReport admissible(const GraphJet& jet, int k) {
  return symfun::in_gamma(k, frame(jet).kappa);
}

double semiconvexity_constant(const std::vector<VectorXd>& kappas) {
  if (kappas.empty()) {
    throw std::invalid_argument("semiconvexity_constant: empty sample list");
  }
  double lowest = std::numeric_limits<double>::infinity();
  for (const VectorXd& kappa : kappas) {
    if (kappa.size() == 0) {
      throw std::invalid_argument("semiconvexity_constant: empty vector in list");
    }
    lowest = std::min(lowest, kappa.minCoeff());
  }
  return std::max(0.0, -lowest);
}

GraphJet hyperboloid_jet(double radius, const VectorXd& x, const VectorXd& center,
                         const VectorXd& affine_slope, double affine_offset) {
  const int n = static_cast<int>(x.size());
  const VectorXd d = x - center;
  const double s = std::sqrt(radius * radius + d.squaredNorm());
  double u = s + affine_offset;
  VectorXd du = d / s;
  const MatrixXd d2u =
      (MatrixXd::Identity(n, n) - d * d.transpose() / (s * s)) / s;
  if (affine_slope.size() == n) {
    du += affine_slope;
    u += affine_slope.dot(x);
  }
  return make_jet(u, du, d2u, x);
}

}  // namespace sigmak::geometry
