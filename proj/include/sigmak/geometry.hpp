#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "sigmak/symfun.hpp"

namespace sigmak::geometry {

/// Default safety margin below 1 for the spacelike gradient bound |Du| < 1.
/// Shared with the grid module's discrete checks.
inline constexpr double kSpacelikeMargin = 1e-8;

class SpacelikeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pointwise second-order data of a graph x -> (x, u(x)).
/// Construct through make_jet, which enforces |du| < 1 - margin and symmetry.
struct GraphJet {
  double u = 0.0;
  Eigen::VectorXd du;   // gradient Du
  Eigen::MatrixXd d2u;  // Hessian D^2 u
  Eigen::VectorXd x;    // base point; empty unless position monitors need it

  int n() const { return static_cast<int>(du.size()); }
};

GraphJet make_jet(double u, Eigen::VectorXd du, Eigen::MatrixXd d2u,
                  Eigen::VectorXd x = Eigen::VectorXd(),
                  double spacelike_margin = kSpacelikeMargin);

/// Derived Minkowski quantities of a spacelike graph at one point.
struct MinkowskiFrame {
  double w = 1.0;            // sqrt(1 - |Du|^2), in (0, 1]
  double tilt = 1.0;         // 1/w, >= 1
  Eigen::VectorXd nu;        // unit timelike normal (Du, 1)/w, n+1 components
  Eigen::MatrixXd g;         // induced metric I - du du^T
  Eigen::MatrixXd g_inv;     // I + du du^T / w^2
  Eigen::MatrixXd h;         // second fundamental form d2u / w
  Eigen::MatrixXd curvature; // A = (1/w) gamma d2u gamma (symmetric)
  Eigen::VectorXd kappa;     // eigenvalues of A, sorted descending
};

/// gamma = I + du du^T / (w (1 + w)); A = (1/w) gamma d2u gamma.
Eigen::MatrixXd tilt_matrix(const Eigen::VectorXd& du);

MinkowskiFrame frame(const GraphJet& jet);

/// Alternative curvature matrix (1/w)(I + du du^T / w^2) d2u. Generally
/// non-symmetric; similar to frame().curvature, so same eigenvalues.
Eigen::MatrixXd curvature_matrix_alt(const GraphJet& jet);

/// Cone membership of the principal curvatures of the jet's graph.
symfun::ConeReport admissible(const GraphJet& jet, int k);

/// K = max(0, -min entry over all vectors): the lower curvature barrier
/// kappa_i >= -K realized by the sample set.
double semiconvexity_constant(const std::vector<Eigen::VectorXd>& kappas);

/// Analytic jet of the umbilic graph u = sqrt(R^2 + |x - c|^2) (+ affine),
/// used by initial guesses, tests, and oracles.
GraphJet hyperboloid_jet(double radius, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& center,
                         const Eigen::VectorXd& affine_slope = Eigen::VectorXd(),
                         double affine_offset = 0.0);

}  // namespace sigmak::geometry
