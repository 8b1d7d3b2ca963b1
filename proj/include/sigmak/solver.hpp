#pragma once

#include <Eigen/Sparse>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sigmak/expr.hpp"
#include "sigmak/grid.hpp"

namespace sigmak::solver {

/// Jacobian representation: supports matrix-vector products and row access.
using LinearOperator = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class InitFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  double tol_residual = 1e-10;   // max-norm of the combined residual
  int max_newton = 50;           // per homotopy step
  int homotopy_steps = 10;
  double backtrack_factor = 0.5;
  int max_backtracks = 30;
  double linear_tol = 1e-12;     // relative residual of inner linear solves
  int dense_threshold = 5000;    // unknown count switching direct -> Krylov
  bool collect_trace = false;    // JSON-lines iteration trace in SolveState
};

/// Discrete Dirichlet problem sigma_k[u] = psi(x, u, Du), u = phi on the
/// boundary, over a prebuilt grid.
struct Problem {
  std::shared_ptr<const grid::Grid> grid;
  int k = 2;
  expr::PsiSpec psi;
  grid::BoundaryData phi;
  SolverOptions options;
};

/// Checks k-range, sampled positivity of psi over the relevant region, and
/// spacelikeness of phi. Throws on violation.
void validate_problem(const Problem& problem);

enum class SolveStatus { Converged, Nonconvergence, ConeExit, InitFailure };

struct SolveState {
  grid::Field u;
  double t = 0.0;                 // homotopy parameter reached
  double residual_norm = 0.0;
  int newton_iters = 0;           // accepted steps, all homotopy levels
  double min_cone_margin = 0.0;   // min over interior nodes of min_j sigma_j
  double min_spacelike_margin = 0.0;  // min over interior nodes of 1 - |du|
  SolveStatus status = SolveStatus::Nonconvergence;
  std::string message;
  std::vector<std::string> trace;  // JSON lines when options.collect_trace
};

/// Residual field: sigma_k of the discrete jet minus psi at interior nodes,
/// Dirichlet closure rows at boundary-adjacent nodes. Throws ConeViolation /
/// SpacelikeViolation (with location) if u is inadmissible somewhere.
grid::Field residual(const Problem& problem, const grid::Field& u);

/// Analytic Jacobian of the residual at u.
LinearOperator linearize(const Problem& problem, const grid::Field& u);

/// Admissible start: affine fit of phi plus an umbilic cap, with the cap
/// radius searched so that sigma_k of the guess clears 2 sup psi pointwise
/// while staying spacelike. Throws InitFailure when no radius works.
grid::Field initial_guess(const Problem& problem);

/// Damped Newton with homotopy from the constructed initial guess.
/// Nonconvergence is reported in the returned state, never thrown.
SolveState solve(const Problem& problem);

/// Same, but from a caller-supplied admissible start field.
SolveState solve_from(const Problem& problem, const grid::Field& start);

struct SubsolutionReport {
  bool is_subsolution = false;
  double margin = 0.0;        // min over interior nodes of sigma_k[v] - psi(x,v,Dv)
  double boundary_gap = 0.0;  // max |closure row| of v
};

/// Discrete subsolution test against the problem's own psi and phi.
SubsolutionReport check_subsolution(const Problem& problem, const grid::Field& v);

/// The k = 1 comparison problem: sigma_1[v] = n (binomial(n,k)^{-1} psi)^{1/k}
/// with the same boundary data. Requires psi gradient-free and psi_u >= 0.
Problem mean_curvature_problem(const Problem& problem);

/// Solves the comparison problem with the same machinery.
SolveState mean_curvature_supersolution(const Problem& problem);

}  // namespace sigmak::solver
