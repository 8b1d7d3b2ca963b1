#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace sigmak::symfun {

/// Vector of principal curvatures kappa = (kappa_1, ..., kappa_n).
/// Operations validate that entries are finite and n >= 1.
using CurvatureVector = Eigen::VectorXd;

/// Thrown when an input lies outside the Garding cone an operation requires.
class ConeViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Membership report for the cone Gamma_k = { kappa : sigma_j(kappa) > 0, 1 <= j <= k }.
struct ConeReport {
  int k = 0;
  Eigen::VectorXd sigmas;  // sigma_1 .. sigma_k evaluated at kappa
  bool in_cone = false;    // true iff every entry of sigmas is strictly positive
};

/// Newton tensor T_m(A): the matrix gradient of sigma_{m+1} over symmetric matrices.
/// Recurrence: T_0 = I, T_m = sigma_m(A) I - A T_{m-1}.
struct NewtonTensor {
  int order = 0;
  Eigen::MatrixXd matrix;
};

/// k-th elementary symmetric polynomial of kappa, sigma_0 := 1.
/// Computed by the stable column recurrence, O(n k).
double sigma(int k, const CurvatureVector& kappa);

/// (sigma_0, sigma_1, ..., sigma_k) in one recurrence pass.
Eigen::VectorXd sigma_all(int k, const CurvatureVector& kappa);

/// Gradient of sigma_k: component i is sigma_{k-1} of kappa with entry i deleted.
Eigen::VectorXd sigma_grad(int k, const CurvatureVector& kappa);

/// Hessian of sigma_k: entry (i,j), i != j, is sigma_{k-2} of kappa with entries
/// i and j deleted; diagonal entries are zero. Requires k >= 2.
Eigen::MatrixXd sigma_hess(int k, const CurvatureVector& kappa);

/// Evaluates sigma_1..sigma_k and reports strict cone membership.
ConeReport in_gamma(int k, const CurvatureVector& kappa);

/// Normalized power-mean chain (H_1, H_2^{1/2}, ..., H_k^{1/k}) with
/// H_j = sigma_j / binomial(n, j); non-increasing on Gamma_k.
/// Throws ConeViolation if kappa is outside Gamma_k.
Eigen::VectorXd maclaurin_chain(int k, const CurvatureVector& kappa);

/// sigma_k of the eigenvalues of a symmetric matrix A, computed as the sum of
/// all k x k principal minors (a polynomial in the entries, no eigensolve).
double sigma_of_matrix(int k, const Eigen::MatrixXd& A);

/// T_m(A) as above; for diagonal A its diagonal equals sigma_grad(m+1, diag(A)).
NewtonTensor newton_tensor(int m, const Eigen::MatrixXd& A);

/// Concavity quadratic form of sigma_k at kappa applied to xi:
///   -sum_{p,q} sigma_k^{pp,qq}(kappa) xi_p xi_q / sigma_k
///   + (sum_i sigma_k^{ii}(kappa) xi_i)^2 / sigma_k^2.
/// Requires kappa in Gamma_k (hence sigma_k > 0).
double lu_quadratic(int k, const CurvatureVector& kappa, const Eigen::VectorXd& xi);

/// Exact binomial coefficient as a double (small arguments only).
double binomial(int n, int k);

}  // namespace sigmak::symfun
