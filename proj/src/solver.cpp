#include "sigmak/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "sigmak/symfun.hpp"

namespace sigmak::solver {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using grid::Field;
using grid::Grid;
using grid::NodeClass;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Right-hand side during homotopy: (1 - t) g0 + t psi, with partials scaled
// by t. g0 is the smoothed sigma_k of the start field; empty at t = 1.
struct PsiContext {
  const expr::PsiSpec* psi = nullptr;
  const VectorXd* blend_base = nullptr;
  double t = 1.0;

  double value(int node, const expr::Env& env) const {
    double v = t * expr::eval(psi->ast, env);
    if (t < 1.0) v += (1.0 - t) * (*blend_base)[node];
    return v;
  }

  expr::EvalResult partials(int node, const expr::Env& env) const {
    expr::EvalResult r = expr::eval_with_partials(psi->ast, env);
    r.value *= t;
    r.du *= t;
    r.dx *= t;
    r.dp *= t;
    if (t < 1.0) r.value += (1.0 - t) * (*blend_base)[node];
    return r;
  }
};

// Raw stencil application without jet validation (line-search probes must
// not throw while testing infeasible candidates).
struct RawJet {
  VectorXd du;
  MatrixXd d2u;
};

RawJet apply_stencil(const Grid& g, const VectorXd& values, int c) {
  const grid::JetStencil& st = g.stencils[c];
  const int m = static_cast<int>(st.nodes.size());
  VectorXd local(m);
  for (int i = 0; i < m; ++i) local[i] = values[st.nodes[i]];
  const int n = g.n();
  RawJet jet;
  jet.du = st.gw * local + st.gc;
  const VectorXd tri = st.hw * local + st.hc;
  jet.d2u.resize(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = a; b < n; ++b) {
      const double v = tri[grid::tri_index(n, a, b)];
      jet.d2u(a, b) = v;
      jet.d2u(b, a) = v;
    }
  }
  return jet;
}

// sigma_1..sigma_k of a small symmetric matrix (closed forms for n <= 3).
void sigma_prefix(const MatrixXd& a, int k, double* out) {
  for (int j = 1; j <= k; ++j) {
    out[j - 1] = symfun::sigma_of_matrix(j, a);
  }
}

struct StateEval {
  VectorXd residual;
  double norm = kInf;
  double min_cone_margin = kInf;
  double min_spacelike = kInf;
  bool feasible = false;
  bool spacelike_ok = true;
  int worst_node = -1;
  std::string worst_kind;
};

expr::Env make_env(const Grid& g, int c, double u, const VectorXd& du) {
  expr::Env env;
  env.x = g.node_x_compact(c);
  env.u = u;
  env.p = du;
  return env;
}

StateEval eval_state(const Problem& problem, const PsiContext& psi,
                     const VectorXd& values) {
  const Grid& g = *problem.grid;
  const int k = problem.k;
  StateEval ev;
  ev.residual.resize(g.inside_count);
  ev.feasible = true;
  double sigmas[8];

  for (int c = 0; c < g.inside_count; ++c) {
    if (!g.is_interior(c)) {
      const grid::BoundaryRow& row = g.closure[c];
      if (row.inner >= 0) {
        ev.residual[c] =
            (1.0 + row.frac) * values[c] - row.frac * values[row.inner] - row.phi;
      } else {
        ev.residual[c] = values[c] - row.phi;
      }
      continue;
    }

    const RawJet jet = apply_stencil(g, values, c);
    const double speed = jet.du.norm();
    const double smargin = 1.0 - speed;
    ev.min_spacelike = std::min(ev.min_spacelike, smargin);
    if (!(smargin >= geometry::kSpacelikeMargin)) {
      ev.feasible = false;
      ev.spacelike_ok = false;
      if (ev.worst_node < 0) {
        ev.worst_node = c;
        ev.worst_kind = "spacelike";
      }
      ev.residual[c] = 0.0;  // placeholder; state is rejected anyway
      continue;
    }

    const double w = std::sqrt(1.0 - speed * speed);
    const MatrixXd gamma = geometry::tilt_matrix(jet.du);
    MatrixXd a = (gamma * jet.d2u * gamma) / w;
    a = 0.5 * (a + a.transpose()).eval();

    sigma_prefix(a, k, sigmas);
    double cone = kInf;
    for (int j = 0; j < k; ++j) cone = std::min(cone, sigmas[j]);
    ev.min_cone_margin = std::min(ev.min_cone_margin, cone);
    if (!(cone > 0.0)) {
      ev.feasible = false;
      if (ev.worst_node < 0) {
        ev.worst_node = c;
        ev.worst_kind = "cone";
      }
      ev.residual[c] = 0.0;
      continue;
    }

    const expr::Env env = make_env(g, c, values[c], jet.du);
    ev.residual[c] = sigmas[k - 1] - psi.value(c, env);
  }
  if (ev.feasible) {
    ev.norm = ev.residual.cwiseAbs().maxCoeff();
  }
  return ev;
}

LinearOperator assemble_jacobian(const Problem& problem, const PsiContext& psi,
                                 const VectorXd& values) {
  const Grid& g = *problem.grid;
  const int n = g.n();
  const int k = problem.k;
  const int ntri = grid::tri_count(n);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(g.inside_count) * 16);

  for (int c = 0; c < g.inside_count; ++c) {
    if (!g.is_interior(c)) {
      const grid::BoundaryRow& row = g.closure[c];
      if (row.inner >= 0) {
        trips.emplace_back(c, c, 1.0 + row.frac);
        trips.emplace_back(c, row.inner, -row.frac);
      } else {
        trips.emplace_back(c, c, 1.0);
      }
      continue;
    }

    const RawJet jet = apply_stencil(g, values, c);
    const VectorXd& du = jet.du;
    const MatrixXd& m = jet.d2u;
    const double w = std::sqrt(1.0 - du.squaredNorm());
    const double s = 1.0 / (w * (1.0 + w));
    const MatrixXd gamma = MatrixXd::Identity(n, n) + du * du.transpose() * s;

    MatrixXd a = (gamma * m * gamma) / w;
    a = 0.5 * (a + a.transpose()).eval();
    const MatrixXd t_tensor = symfun::newton_tensor(k - 1, a).matrix;

    // Hessian chain: d sigma_k / d d2u = (1/w) gamma T gamma.
    const MatrixXd gmat = (gamma * t_tensor * gamma) / w;

    // Gradient chain: d sigma_k / d du_c = tr(T dA/ddu_c) with
    //   dA/ddu_c = (du_c / w^3) gamma M gamma
    //            + (1/w)(gamma_c M gamma + gamma M gamma_c),
    //   gamma_c  = s (e_c du^T + du e_c^T) + q_c du du^T,
    //   q_c      = s^2 (1 + 2w) du_c / w.
    const MatrixXd b = gamma * m * gamma;
    const MatrixXd mg = m * gamma;           // M gamma
    const MatrixXd gm = gamma * m;           // gamma M
    const double trace_tb = (t_tensor * b).trace();
    VectorXd vgrad(n);
    for (int cdir = 0; cdir < n; ++cdir) {
      const double qc = s * s * (1.0 + 2.0 * w) * du[cdir] / w;
      MatrixXd gamma_c = qc * du * du.transpose();
      gamma_c.row(cdir) += s * du.transpose();
      gamma_c.col(cdir) += s * du;
      const double tr =
          (t_tensor * (gamma_c * mg + gm * gamma_c)).trace() / w +
          du[cdir] / (w * w * w) * trace_tb;
      vgrad[cdir] = tr;
    }

    const expr::Env env = make_env(g, c, values[c], du);
    const expr::EvalResult pr = psi.partials(c, env);
    vgrad -= pr.dp;

    // Per-slot weights: off-diagonal tri slots drive both (a,b) and (b,a)
    // of the Hessian, hence the factor 2.
    Eigen::VectorXd tri_coef(ntri);
    for (int a2 = 0; a2 < n; ++a2) {
      tri_coef[grid::tri_index(n, a2, a2)] = gmat(a2, a2);
      for (int b2 = a2 + 1; b2 < n; ++b2) {
        tri_coef[grid::tri_index(n, a2, b2)] = 2.0 * gmat(a2, b2);
      }
    }

    const grid::JetStencil& st = g.stencils[c];
    const int msize = static_cast<int>(st.nodes.size());
    for (int i = 0; i < msize; ++i) {
      double coef = st.hw.col(i).dot(tri_coef) + st.gw.col(i).dot(vgrad);
      if (st.nodes[i] == c) coef -= pr.du;
      if (coef != 0.0) trips.emplace_back(c, st.nodes[i], coef);
    }
  }

  LinearOperator jac(g.inside_count, g.inside_count);
  jac.setFromTriplets(trips.begin(), trips.end());
  return jac;
}

struct LinearStats {
  std::string method;
  int iterations = 0;
};

VectorXd solve_linear(const LinearOperator& jac, const VectorXd& rhs,
                      const SolverOptions& opts, LinearStats* stats) {
  const int n = static_cast<int>(jac.rows());
  if (n <= opts.dense_threshold) {
    const MatrixXd dense = MatrixXd(jac);
    Eigen::PartialPivLU<MatrixXd> lu(dense);
    VectorXd x = lu.solve(rhs);
    if (stats != nullptr) stats->method = "dense_lu";
    if (x.allFinite()) return x;
    // Singular to rounding: fall through to the sparse direct path.
  }

  Eigen::SparseMatrix<double> col = jac;  // column-major copies for solvers

  Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::DiagonalPreconditioner<double>>
      gmres(col);
  gmres.set_restart(60);
  gmres.setMaxIterations(2000);
  gmres.setTolerance(opts.linear_tol);
  VectorXd x = gmres.solve(rhs);
  if (gmres.info() == Eigen::Success && x.allFinite()) {
    if (stats != nullptr) {
      stats->method = "gmres_jacobi";
      stats->iterations = static_cast<int>(gmres.iterations());
    }
    return x;
  }

  // Krylov stagnated; a sparse direct factorization is the robust fallback.
  Eigen::SparseLU<Eigen::SparseMatrix<double>> slu;
  slu.analyzePattern(col);
  slu.factorize(col);
  if (slu.info() != Eigen::Success) {
    throw std::runtime_error("solve_linear: Jacobian factorization failed");
  }
  x = slu.solve(rhs);
  if (stats != nullptr) stats->method = "sparse_lu_fallback";
  return x;
}

std::string trace_line(double t, int iter, double res, double cone, double space,
                       double step) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"t\":%.6g,\"iter\":%d,\"residual\":%.17g,\"cone_margin\":%.17g,"
                "\"spacelike_margin\":%.17g,\"step\":%.6g}",
                t, iter, res, cone, space, step);
  return buf;
}

struct NewtonOutcome {
  bool ok = false;
  bool cone_blocked = false;
  std::string message;
};

NewtonOutcome newton_level(const Problem& problem, const PsiContext& psi,
                           VectorXd& values, SolveState& state) {
  const SolverOptions& opts = problem.options;
  StateEval ev = eval_state(problem, psi, values);
  if (!ev.feasible) {
    NewtonOutcome out;
    out.cone_blocked = (ev.worst_kind == "cone");
    out.message = "infeasible state entering Newton (" + ev.worst_kind + " at " +
                  problem.grid->describe_node(ev.worst_node) + ")";
    return out;
  }

  for (int iter = 0; iter < opts.max_newton; ++iter) {
    state.residual_norm = ev.norm;
    state.min_cone_margin = ev.min_cone_margin;
    state.min_spacelike_margin = ev.min_spacelike;
    if (ev.norm <= opts.tol_residual) {
      NewtonOutcome out;
      out.ok = true;
      return out;
    }

    const LinearOperator jac = assemble_jacobian(problem, psi, values);
    LinearStats lstats;
    VectorXd step;
    try {
      step = solve_linear(jac, VectorXd(-ev.residual), opts, &lstats);
    } catch (const std::exception& ex) {
      NewtonOutcome out;
      out.message = ex.what();
      return out;
    }

    double lambda = 1.0;
    bool accepted = false;
    bool all_feasibility_failures = true;
    for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
      const VectorXd candidate = values + lambda * step;
      const StateEval trial = eval_state(problem, psi, candidate);
      if (trial.feasible && trial.norm < ev.norm) {
        values = candidate;
        ev = trial;
        accepted = true;
        ++state.newton_iters;
        if (opts.collect_trace) {
          state.trace.push_back(trace_line(psi.t, state.newton_iters, ev.norm,
                                           ev.min_cone_margin, ev.min_spacelike,
                                           lambda));
        }
        break;
      }
      if (trial.feasible) all_feasibility_failures = false;
      lambda *= opts.backtrack_factor;
    }
    if (!accepted) {
      NewtonOutcome out;
      out.cone_blocked = all_feasibility_failures;
      out.message = all_feasibility_failures
                        ? "admissibility unrecoverable along the Newton direction"
                        : "backtracking exhausted without residual decrease";
      state.residual_norm = ev.norm;
      return out;
    }
  }

  StateEval last = eval_state(problem, psi, values);
  state.residual_norm = last.norm;
  state.min_cone_margin = last.min_cone_margin;
  state.min_spacelike_margin = last.min_spacelike;
  if (last.norm <= opts.tol_residual) {
    NewtonOutcome out;
    out.ok = true;
    return out;
  }
  NewtonOutcome out;
  out.message = "Newton iteration limit reached";
  return out;
}

// Smoothed sigma_k of a start field over interior nodes: the homotopy base.
VectorXd blend_base_from(const Problem& problem, const VectorXd& values) {
  const Grid& g = *problem.grid;
  VectorXd raw = VectorXd::Zero(g.inside_count);
  std::vector<bool> have(g.inside_count, false);
  for (int c = 0; c < g.inside_count; ++c) {
    if (!g.is_interior(c)) continue;
    const RawJet jet = apply_stencil(g, values, c);
    const double w = std::sqrt(1.0 - jet.du.squaredNorm());
    const MatrixXd gamma = geometry::tilt_matrix(jet.du);
    MatrixXd a = (gamma * jet.d2u * gamma) / w;
    a = 0.5 * (a + a.transpose()).eval();
    raw[c] = symfun::sigma_of_matrix(problem.k, a);
    have[c] = true;
  }
  // One Jacobi sweep over interior nodes (axis neighbors that are interior).
  VectorXd smooth = raw;
  const int n = g.n();
  for (int c = 0; c < g.inside_count; ++c) {
    if (!have[c]) continue;
    const Eigen::VectorXi idx = g.lattice_idx(g.lattice_of[c]);
    double acc = raw[c];
    int count = 1;
    for (int d = 0; d < n; ++d) {
      for (int sign : {+1, -1}) {
        Eigen::VectorXi nb = idx;
        nb[d] += sign;
        bool ok = true;
        for (int q = 0; q < n; ++q) {
          if (std::abs(nb[q]) > g.half_counts[q]) ok = false;
        }
        if (!ok) continue;
        const int nb_c = g.compact_of[g.lattice_id(nb)];
        if (nb_c >= 0 && have[nb_c]) {
          acc += raw[nb_c];
          ++count;
        }
      }
    }
    smooth[c] = acc / count;
  }
  return smooth;
}

}  // namespace

void validate_problem(const Problem& problem) {
  const Grid& g = *problem.grid;
  const int n = g.n();
  if (problem.k < 1 || problem.k > n) {
    throw std::invalid_argument("Problem: curvature order k out of range [1, n]");
  }

  // phi must be spacelike.
  if (problem.phi.is_affine()) {
    if (problem.phi.slope.size() != n) {
      throw std::invalid_argument("Problem: affine phi slope dimension mismatch");
    }
    if (problem.phi.slope.norm() >= 1.0) {
      throw std::invalid_argument("Problem: boundary data not spacelike (affine slope)");
    }
  } else {
    double worst = 0.0;
    for (int c = 0; c < g.inside_count; ++c) {
      for (const auto& cut : g.cuts[c]) {
        Eigen::VectorXd xcut = g.node_x_compact(c);
        xcut[cut.dir] += cut.sign * cut.frac * g.h;
        worst = std::max(worst, problem.phi.grad(xcut).norm());
      }
    }
    if (worst >= 1.0) {
      throw std::invalid_argument("Problem: boundary data not spacelike (sampled sup|Dphi| = " +
                                  std::to_string(worst) + ")");
    }
  }

  // Sampled positivity of psi over the relevant region; throws on violation.
  double phi_lo = kInf, phi_hi = -kInf;
  for (int c = 0; c < g.inside_count; ++c) {
    for (const auto& cut : g.cuts[c]) {
      phi_lo = std::min(phi_lo, cut.phi);
      phi_hi = std::max(phi_hi, cut.phi);
    }
  }
  if (!std::isfinite(phi_lo)) {
    phi_lo = phi_hi = problem.phi.eval(g.domain.center);
  }
  const double diam = g.domain.diameter();
  const Eigen::VectorXd ext = g.domain.half_extent();
  (void)expr::sample_bounds(problem.psi, g.domain.center - ext, g.domain.center + ext,
                            phi_lo - diam, phi_hi + diam, 1.0);
}

grid::Field residual(const Problem& problem, const grid::Field& u) {
  const PsiContext psi{&problem.psi, nullptr, 1.0};
  const StateEval ev = eval_state(problem, psi, u.values);
  if (!ev.feasible) {
    const std::string where = problem.grid->describe_node(ev.worst_node);
    if (ev.worst_kind == "spacelike") {
      throw geometry::SpacelikeViolation("residual: spacelike violation at " + where);
    }
    throw symfun::ConeViolation("residual: inadmissible state at " + where);
  }
  Field out;
  out.grid = u.grid;
  out.values = ev.residual;
  return out;
}

LinearOperator linearize(const Problem& problem, const grid::Field& u) {
  const PsiContext psi{&problem.psi, nullptr, 1.0};
  const StateEval ev = eval_state(problem, psi, u.values);
  if (!ev.feasible) {
    const std::string where = problem.grid->describe_node(ev.worst_node);
    if (ev.worst_kind == "spacelike") {
      throw geometry::SpacelikeViolation("linearize: spacelike violation at " + where);
    }
    throw symfun::ConeViolation("linearize: inadmissible state at " + where);
  }
  return assemble_jacobian(problem, psi, u.values);
}

grid::Field initial_guess(const Problem& problem) {
  validate_problem(problem);
  const Grid& g = *problem.grid;
  const int n = g.n();

  // Affine least-squares fit of phi over the cut points, shifted so the fit
  // never exceeds phi on the boundary (keeps the guess usable as a
  // subsolution start).
  std::vector<Eigen::VectorXd> cut_x;
  std::vector<double> cut_phi;
  for (int c = 0; c < g.inside_count; ++c) {
    for (const auto& cut : g.cuts[c]) {
      Eigen::VectorXd xc = g.node_x_compact(c);
      xc[cut.dir] += cut.sign * cut.frac * g.h;
      cut_x.push_back(xc);
      cut_phi.push_back(cut.phi);
    }
  }
  if (cut_x.empty()) throw InitFailure("initial_guess: grid has no boundary cuts");

  const int m = static_cast<int>(cut_x.size());
  MatrixXd basis(m, n + 1);
  VectorXd rhs(m);
  for (int i = 0; i < m; ++i) {
    basis.row(i).head(n) = cut_x[i].transpose();
    basis(i, n) = 1.0;
    rhs[i] = cut_phi[i];
  }
  VectorXd fit = (basis.transpose() * basis)
                     .ldlt()
                     .solve(basis.transpose() * rhs);
  VectorXd slope = fit.head(n);
  double offset = fit[n];
  double excess = 0.0;
  for (int i = 0; i < m; ++i) {
    excess = std::max(excess, slope.dot(cut_x[i]) + offset - cut_phi[i]);
  }
  offset -= excess;

  if (slope.norm() >= 0.98) {
    throw InitFailure("initial_guess: affine part of phi is too steep for a spacelike start");
  }

  // Cap radius search: sigma_k of the guess must clear 2 sup psi while the
  // gradient stays safely spacelike. Admissible graphs have sigma_1 > 0, so
  // solutions peak on the boundary; the u-range for the sup is
  // [phi_min - diam, phi_max].
  double phi_lo = *std::min_element(cut_phi.begin(), cut_phi.end());
  double phi_hi = *std::max_element(cut_phi.begin(), cut_phi.end());
  const double diam = g.domain.diameter();
  const Eigen::VectorXd ext = g.domain.half_extent();
  const auto bounds =
      expr::sample_bounds(problem.psi, g.domain.center - ext, g.domain.center + ext,
                          phi_lo - diam, phi_hi, 1.0);
  const double target = 2.0 * bounds.sup_psi;

  const Eigen::VectorXd center = g.domain.center;
  double rho_ref = 0.0;
  for (const auto& xc : cut_x) rho_ref = std::max(rho_ref, (xc - center).norm());

  double best_margin = -kInf;
  double best_radius = 0.0;
  for (double radius = 8.0 * rho_ref; radius > rho_ref / 128.0; radius *= 0.85) {
    const double cap_ref = std::sqrt(radius * radius + rho_ref * rho_ref);
    bool ok = true;
    double margin = kInf;
    for (int c = 0; c < g.inside_count && ok; ++c) {
      const Eigen::VectorXd x = g.node_x_compact(c);
      const Eigen::VectorXd d = x - center;
      const Eigen::VectorXd cap_du =
          slope + d / std::sqrt(radius * radius + d.squaredNorm());
      if (cap_du.norm() > 0.98) {
        ok = false;
        break;
      }
      const auto jet =
          geometry::hyperboloid_jet(radius, x, center, slope, offset - cap_ref);
      const MatrixXd gamma = geometry::tilt_matrix(jet.du);
      const double w = std::sqrt(1.0 - jet.du.squaredNorm());
      MatrixXd a = (gamma * jet.d2u * gamma) / w;
      a = 0.5 * (a + a.transpose()).eval();
      for (int j = 1; j < problem.k; ++j) {
        if (symfun::sigma_of_matrix(j, a) <= 0.0) ok = false;
      }
      margin = std::min(margin, symfun::sigma_of_matrix(problem.k, a) - target);
    }
    if (!ok) continue;
    if (margin > best_margin) {
      best_margin = margin;
      best_radius = radius;
    }
    if (margin < 0.0) continue;

    // Candidate accepted analytically; verify the discrete jets node-by-node.
    const double cap_off = offset - cap_ref;
    Field u0 = Field::sample(problem.grid, [&](const Eigen::VectorXd& xx) {
      const double rr = (xx - center).norm();
      return slope.dot(xx) + cap_off + std::sqrt(radius * radius + rr * rr);
    });
    const PsiContext psi{&problem.psi, nullptr, 1.0};
    const StateEval ev = eval_state(problem, psi, u0.values);
    if (ev.feasible) return u0;
  }
  std::ostringstream msg;
  msg << "initial_guess: no admissible cap radius found (best sigma_k margin "
      << best_margin << " at radius " << best_radius << ", needed >= 0 against 2 sup psi = "
      << target << ")";
  throw InitFailure(msg.str());
}

SolveState solve_from(const Problem& problem, const grid::Field& start) {
  validate_problem(problem);
  const SolverOptions& opts = problem.options;
  if (opts.homotopy_steps < 1) {
    throw std::invalid_argument("SolverOptions: homotopy_steps must be >= 1");
  }
  if (problem.psi.has_abs()) {
    std::fprintf(stderr,
                 "warning: psi contains abs, which is not smooth; "
                 "Newton convergence is not guaranteed near its kinks\n");
  }

  SolveState state;
  state.u = start;
  state.status = SolveStatus::Nonconvergence;

  VectorXd values = start.values;
  const VectorXd base = blend_base_from(problem, values);

  for (int s = 1; s <= opts.homotopy_steps; ++s) {
    const double t = static_cast<double>(s) / opts.homotopy_steps;
    const PsiContext psi{&problem.psi, &base, t};
    const NewtonOutcome out = newton_level(problem, psi, values, state);
    state.t = t;
    state.u.values = values;
    if (!out.ok) {
      state.status = out.cone_blocked ? SolveStatus::ConeExit : SolveStatus::Nonconvergence;
      state.message = "homotopy step t=" + std::to_string(t) + ": " + out.message;
      return state;
    }
  }

  state.status = SolveStatus::Converged;
  state.message = "converged";
  return state;
}

SolveState solve(const Problem& problem) {
  grid::Field start;
  try {
    start = initial_guess(problem);
  } catch (const InitFailure& ex) {
    SolveState state;
    state.u = Field::zeros(problem.grid);
    state.status = SolveStatus::InitFailure;
    state.message = ex.what();
    return state;
  }
  return solve_from(problem, start);
}

SubsolutionReport check_subsolution(const Problem& problem, const grid::Field& v) {
  const Grid& g = *problem.grid;
  SubsolutionReport rep;
  rep.margin = kInf;
  const PsiContext psi{&problem.psi, nullptr, 1.0};
  const StateEval ev = eval_state(problem, psi, v.values);
  if (!ev.feasible) {
    const std::string where = g.describe_node(ev.worst_node);
    if (ev.worst_kind == "spacelike") {
      throw geometry::SpacelikeViolation("check_subsolution: spacelike violation at " + where);
    }
    throw symfun::ConeViolation("check_subsolution: inadmissible field at " + where);
  }
  rep.boundary_gap = 0.0;
  for (int c = 0; c < g.inside_count; ++c) {
    if (g.is_interior(c)) {
      rep.margin = std::min(rep.margin, ev.residual[c]);
    } else {
      rep.boundary_gap = std::max(rep.boundary_gap, std::abs(ev.residual[c]));
    }
  }
  const double phi_scale =
      1.0 + std::abs(problem.phi.eval(g.domain.center));
  const double boundary_tol = 10.0 * phi_scale * g.h * g.h;
  rep.is_subsolution = rep.margin >= -10.0 * problem.options.tol_residual &&
                       rep.boundary_gap <= boundary_tol;
  return rep;
}

Problem mean_curvature_problem(const Problem& problem) {
  if (problem.psi.depends_on_p()) {
    throw std::invalid_argument(
        "mean_curvature_problem: psi must not depend on the gradient");
  }
  const Grid& g = *problem.grid;
  const int n = g.n();
  double phi_lo = kInf, phi_hi = -kInf;
  for (int c = 0; c < g.inside_count; ++c) {
    for (const auto& cut : g.cuts[c]) {
      phi_lo = std::min(phi_lo, cut.phi);
      phi_hi = std::max(phi_hi, cut.phi);
    }
  }
  const double diam = g.domain.diameter();
  const Eigen::VectorXd ext = g.domain.half_extent();
  const auto bounds =
      expr::sample_bounds(problem.psi, g.domain.center - ext, g.domain.center + ext,
                          phi_lo - diam, phi_hi + diam, 1.0);
  if (bounds.min_psi_u < -1e-12) {
    throw std::invalid_argument(
        "mean_curvature_problem: psi_u >= 0 required (sampled minimum " +
        std::to_string(bounds.min_psi_u) + ")");
  }

  Problem upper = problem;
  upper.k = 1;
  const double binom = symfun::binomial(n, problem.k);
  // n * (psi / binom)^{1/k}
  upper.psi = expr::PsiSpec::power_scaled(
      problem.psi, n * std::pow(1.0 / binom, 1.0 / problem.k),
      1.0 / problem.k);
  return upper;
}

SolveState mean_curvature_supersolution(const Problem& problem) {
  return solve(mean_curvature_problem(problem));
}

}  // namespace sigmak::solver
