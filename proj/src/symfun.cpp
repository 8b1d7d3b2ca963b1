#include "sigmak/symfun.hpp"

#include <cmath>
#include <vector>

namespace sigmak::symfun {

namespace {

void check_kappa(const CurvatureVector& kappa) {
  if (kappa.size() < 1) {
    throw std::invalid_argument("symfun: kappa must have at least one entry");
  }
  if (!kappa.allFinite()) {
    throw std::invalid_argument("symfun: kappa has non-finite entries");
  }
}

// Column recurrence for elementary symmetric polynomials:
// after absorbing kappa_i, e_j <- e_j + kappa_i e_{j-1}, updated in reverse.
Eigen::VectorXd esf(const CurvatureVector& kappa, int kmax) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(kmax + 1);
  e[0] = 1.0;
  const int n = static_cast<int>(kappa.size());
  for (int i = 0; i < n; ++i) {
    for (int j = std::min(kmax, i + 1); j >= 1; --j) {
      e[j] += kappa[i] * e[j - 1];
    }
  }
  return e;
}

// Same recurrence with one entry skipped (sigma_{.}(kappa|skip)).
Eigen::VectorXd esf_skip(const CurvatureVector& kappa, int kmax, int skip) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(kmax + 1);
  e[0] = 1.0;
  const int n = static_cast<int>(kappa.size());
  int seen = 0;
  for (int i = 0; i < n; ++i) {
    if (i == skip) continue;
    ++seen;
    for (int j = std::min(kmax, seen); j >= 1; --j) {
      e[j] += kappa[i] * e[j - 1];
    }
  }
  return e;
}

Eigen::VectorXd esf_skip2(const CurvatureVector& kappa, int kmax, int skip_a, int skip_b) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(kmax + 1);
  e[0] = 1.0;
  const int n = static_cast<int>(kappa.size());
  int seen = 0;
  for (int i = 0; i < n; ++i) {
    if (i == skip_a || i == skip_b) continue;
    ++seen;
    for (int j = std::min(kmax, seen); j >= 1; --j) {
      e[j] += kappa[i] * e[j - 1];
    }
  }
  return e;
}

void check_symmetric(const Eigen::MatrixXd& A, const char* who) {
  if (A.rows() != A.cols() || A.rows() < 1) {
    throw std::invalid_argument(std::string(who) + ": matrix must be square");
  }
  const double scale = 1.0 + A.cwiseAbs().maxCoeff();
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(who) + ": matrix is not symmetric");
  }
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  }
  return std::round(r);
}

double sigma(int k, const CurvatureVector& kappa) {
  check_kappa(kappa);
  const int n = static_cast<int>(kappa.size());
  if (k < 0 || k > n) {
    throw std::invalid_argument("sigma: order k out of range [0, n]");
  }
  if (k == 0) return 1.0;
  return esf(kappa, k)[k];
}

Eigen::VectorXd sigma_all(int k, const CurvatureVector& kappa) {
  check_kappa(kappa);
  const int n = static_cast<int>(kappa.size());
  if (k < 0 || k > n) {
    throw std::invalid_argument("sigma_all: order k out of range [0, n]");
  }
  return esf(kappa, k);
}

Eigen::VectorXd sigma_grad(int k, const CurvatureVector& kappa) {
  check_kappa(kappa);
  const int n = static_cast<int>(kappa.size());
  if (k < 1 || k > n) {
    throw std::invalid_argument("sigma_grad: order k out of range [1, n]");
  }
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) {
    g[i] = esf_skip(kappa, k - 1, i)[k - 1];
  }
  return g;
}

Eigen::MatrixXd sigma_hess(int k, const CurvatureVector& kappa) {
  check_kappa(kappa);
  const int n = static_cast<int>(kappa.size());
  if (k < 2 || k > n) {
    throw std::invalid_argument("sigma_hess: order k out of range [2, n]");
  }
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double v = esf_skip2(kappa, k - 2, i, j)[k - 2];
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

ConeReport in_gamma(int k, const CurvatureVector& kappa) {
  check_kappa(kappa);
  const int n = static_cast<int>(kappa.size());
  if (k < 1 || k > n) {
    throw std::invalid_argument("in_gamma: order k out of range [1, n]");
  }
  const Eigen::VectorXd e = esf(kappa, k);
  ConeReport r;
  r.k = k;
  r.sigmas = e.segment(1, k);
  r.in_cone = (r.sigmas.array() > 0.0).all();
  return r;
}

Eigen::VectorXd maclaurin_chain(int k, const CurvatureVector& kappa) {
  const ConeReport cone = in_gamma(k, kappa);
  if (!cone.in_cone) {
    throw ConeViolation("maclaurin_chain: kappa is outside Gamma_k");
  }
  const int n = static_cast<int>(kappa.size());
  Eigen::VectorXd chain(k);
  for (int j = 1; j <= k; ++j) {
    const double hj = cone.sigmas[j - 1] / binomial(n, j);
    chain[j - 1] = std::pow(hj, 1.0 / static_cast<double>(j));
  }
  return chain;
}

double sigma_of_matrix(int k, const Eigen::MatrixXd& A) {
  check_symmetric(A, "sigma_of_matrix");
  const int n = static_cast<int>(A.rows());
  if (k < 1 || k > n) {
    throw std::invalid_argument("sigma_of_matrix: order k out of range [1, n]");
  }
  if (k == 1) return A.trace();
  if (n == 2 && k == 2) return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  if (n == 3 && k == 2) {
    return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0) + A(0, 0) * A(2, 2) -
           A(0, 2) * A(2, 0) + A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1);
  }
  if (k == n) return A.determinant();

  // Sum of k x k principal minors, enumerated in lexicographic order.
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  double total = 0.0;
  Eigen::MatrixXd sub(k, k);
  while (true) {
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) sub(r, c) = A(idx[r], idx[c]);
    }
    total += sub.determinant();
    int pos = k - 1;
    while (pos >= 0 && idx[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int q = pos + 1; q < k; ++q) idx[q] = idx[q - 1] + 1;
  }
  return total;
}

NewtonTensor newton_tensor(int m, const Eigen::MatrixXd& A) {
  check_symmetric(A, "newton_tensor");
  const int n = static_cast<int>(A.rows());
  if (m < 0 || m > n - 1) {
    throw std::invalid_argument("newton_tensor: order m out of range [0, n-1]");
  }
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(n, n);
  for (int j = 1; j <= m; ++j) {
    t = sigma_of_matrix(j, A) * Eigen::MatrixXd::Identity(n, n) - (A * t).eval();
  }
  t = 0.5 * (t + t.transpose()).eval();  // kill rounding skew
  NewtonTensor out;
  out.order = m;
  out.matrix = std::move(t);
  return out;
}

double lu_quadratic(int k, const CurvatureVector& kappa, const Eigen::VectorXd& xi) {
  check_kappa(kappa);
  const int n = static_cast<int>(kappa.size());
  if (xi.size() != n) {
    throw std::invalid_argument("lu_quadratic: xi has wrong dimension");
  }
  const ConeReport cone = in_gamma(k, kappa);
  if (!cone.in_cone) {
    throw ConeViolation("lu_quadratic: kappa is outside Gamma_k");
  }
  const double sk = cone.sigmas[k - 1];
  const Eigen::VectorXd g = sigma_grad(k, kappa);
  double hess_term = 0.0;
  if (k >= 2) {
    const Eigen::MatrixXd h = sigma_hess(k, kappa);
    hess_term = xi.dot(h * xi);
  }
  const double grad_term = g.dot(xi);
  return -hess_term / sk + (grad_term * grad_term) / (sk * sk);
}

}  // namespace sigmak::symfun
