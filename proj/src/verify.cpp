#include "sigmak/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "sigmak/sampling.hpp"
#include "sigmak/symfun.hpp"

namespace sigmak::verify {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json witness_json(const Witness& w) {
  return json{{"node", w.node}, {"value", w.value}};
}

json report_json(const EstimateReport& r) {
  json j{{"name", r.name},
         {"passed", r.passed},
         {"hypotheses_met", r.hypotheses_met},
         {"margin", r.margin}};
  j["parameters"] = json::object();
  for (const auto& [key, val] : r.parameters) j["parameters"][key] = val;
  j["witnesses"] = json::array();
  for (const auto& w : r.witnesses) j["witnesses"].push_back(witness_json(w));
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

// sigma_k of the discrete jet through the curvature matrix (minor sums; no
// eigensolve, so it is defined outside the cone as well).
double sigma_k_of_jet(const geometry::GraphJet& jet, int k) {
  const double w = std::sqrt(1.0 - jet.du.squaredNorm());
  const MatrixXd gamma = geometry::tilt_matrix(jet.du);
  MatrixXd a = (gamma * jet.d2u * gamma) / w;
  a = 0.5 * (a + a.transpose()).eval();
  return symfun::sigma_of_matrix(k, a);
}

double psi_of_jet(const expr::PsiSpec& psi, const geometry::GraphJet& jet,
                  double u_value) {
  expr::Env env;
  env.x = jet.x;
  env.u = u_value;
  env.p = jet.du;
  return expr::eval(psi.ast, env);
}

// Relative slack helper: how far lhs >= rhs holds, normalized.
double rel_slack(double lhs, double rhs) {
  return (lhs - rhs) / (1.0 + std::abs(lhs) + std::abs(rhs));
}

struct IdentityAccumulator {
  double worst = kInf;       // most negative normalized slack
  std::string worst_name;
  int worst_index = -1;

  void feed(const std::string& name, int index, double slack) {
    if (slack < worst) {
      worst = slack;
      worst_name = name;
      worst_index = index;
    }
  }
};

void run_identities(const VectorXd& kappa_sorted, int k, int index,
                    IdentityAccumulator& acc, const VectorXd* prev_kappa) {
  const int n = static_cast<int>(kappa_sorted.size());
  const double sk = symfun::sigma(k, kappa_sorted);
  const VectorXd g = symfun::sigma_grad(k, kappa_sorted);

  const double tol_rel = 1e-12;
  acc.feed("euler", index,
           tol_rel - std::abs(kappa_sorted.dot(g) - k * sk) / (1.0 + std::abs(sk)));
  const double skm1 = symfun::sigma(k - 1, kappa_sorted);
  acc.feed("trace", index,
           tol_rel - std::abs(g.sum() - (n - k + 1) * skm1) / (1.0 + std::abs(skm1)));
  for (int i = 0; i < n; ++i) {
    VectorXd rest(n - 1);
    for (int q = 0, wq = 0; q < n; ++q) {
      if (q != i) rest[wq++] = kappa_sorted[q];
    }
    const double tail = (k <= n - 1) ? symfun::sigma(k, rest) : 0.0;
    acc.feed("expansion", index,
             tol_rel - std::abs(sk - (kappa_sorted[i] * g[i] + tail)) /
                           (1.0 + std::abs(sk)));
  }
  acc.feed("derivative_positivity", index, g.minCoeff());
  acc.feed("dominant_derivative", index,
           rel_slack(g[0] * kappa_sorted[0], (double(k) / n) * sk) + 1e-12);
  acc.feed("negative_entry", index,
           kappa_sorted[n - 1] + (double(n - k) / k) * kappa_sorted[0] + 1e-10);
  if (kappa_sorted[n - 1] <= 0.0) {
    acc.feed("minimal_entry_derivative", index,
             rel_slack(g[n - 1], g.sum() / n) + 1e-12);
  }

  const VectorXd chain = symfun::maclaurin_chain(k, kappa_sorted);
  for (int j = 1; j < k; ++j) {
    acc.feed("power_mean_chain", index, chain[j - 1] - chain[j] + 1e-12);
  }

  if (prev_kappa != nullptr && prev_kappa->size() == n) {
    const double mid = std::pow(symfun::sigma(k, 0.5 * (kappa_sorted + *prev_kappa)),
                                1.0 / k);
    const double avg = 0.5 * (std::pow(sk, 1.0 / k) +
                              std::pow(symfun::sigma(k, *prev_kappa), 1.0 / k));
    acc.feed("midpoint_concavity", index, mid - avg + 1e-12);
  }

  // Umbilic samples: the curvature commutator kappa_1 kappa_i^2 -
  // kappa_1^2 kappa_i vanishes identically.
  const double spread = kappa_sorted[0] - kappa_sorted[n - 1];
  const double scale = 1.0 + kappa_sorted.cwiseAbs().maxCoeff();
  if (spread <= 1e-9 * scale) {
    for (int i = 0; i < n; ++i) {
      const double commutator = kappa_sorted[0] * kappa_sorted[i] * kappa_sorted[i] -
                                kappa_sorted[0] * kappa_sorted[0] * kappa_sorted[i];
      acc.feed("umbilic_commutator", index,
               1e-9 - std::abs(commutator) / (scale * scale * scale));
    }
  }
}

}  // namespace

std::string EstimateReport::to_json() const { return report_json(*this).dump(); }

EstimateReport comparison_check(const grid::Field& u, const grid::Field& v, int k,
                                const expr::PsiSpec& psi, double tol) {
  const grid::Grid& g = *u.grid;
  EstimateReport rep;
  rep.name = "comparison";
  rep.parameters["k"] = k;
  rep.parameters["tol"] = tol;

  if (v.grid.get() != u.grid.get()) {
    rep.hypotheses_met = false;
    rep.note = "fields live on different grids";
    return rep;
  }

  // Sampled psi_u >= 0.
  if (psi.depends_on_u()) {
    const VectorXd ext = g.domain.half_extent();
    const double ulo = std::min(u.values.minCoeff(), v.values.minCoeff());
    const double uhi = std::max(u.values.maxCoeff(), v.values.maxCoeff());
    try {
      const auto bounds = expr::sample_bounds(psi, g.domain.center - ext,
                                              g.domain.center + ext, ulo, uhi, 1.0);
      rep.parameters["min_psi_u"] = bounds.min_psi_u;
      if (bounds.min_psi_u < -1e-12) {
        rep.hypotheses_met = false;
        rep.note = "psi_u < 0 sampled; comparison hypotheses not met";
      }
    } catch (const expr::PositivityViolation&) {
      rep.hypotheses_met = false;
      rep.note = "psi positivity violated over the sampled region";
    }
  }

  // Sub/supersolution hypotheses on the discrete jets, with slack for
  // solver residuals.
  const double hyp_tol = std::max(tol, 1e-8);
  double worst_sub = kInf, worst_super = kInf;
  for (int c = 0; c < g.inside_count && rep.hypotheses_met; ++c) {
    if (!g.is_interior(c)) continue;
    geometry::GraphJet ju, jv;
    try {
      ju = grid::fd_jet(u, c);
      jv = grid::fd_jet(v, c);
    } catch (const geometry::SpacelikeViolation&) {
      rep.hypotheses_met = false;
      rep.note = "field not spacelike at " + g.describe_node(c);
      break;
    }
    if (!geometry::admissible(ju, k).in_cone) {
      rep.hypotheses_met = false;
      rep.note = "u not k-admissible at " + g.describe_node(c);
      break;
    }
    worst_sub = std::min(worst_sub, sigma_k_of_jet(ju, k) - psi_of_jet(psi, ju, u.values[c]));
    worst_super = std::min(worst_super,
                           psi_of_jet(psi, jv, v.values[c]) - sigma_k_of_jet(jv, k));
  }
  rep.parameters["subsolution_margin"] = worst_sub;
  rep.parameters["supersolution_margin"] = worst_super;
  if (rep.hypotheses_met && (worst_sub < -hyp_tol || worst_super < -hyp_tol)) {
    rep.hypotheses_met = false;
    rep.note = "sub/supersolution hypotheses not met";
  }

  // Boundary ordering.
  if (rep.hypotheses_met) {
    double worst_bnd = kInf;
    for (int c = 0; c < g.inside_count; ++c) {
      if (g.is_interior(c)) continue;
      worst_bnd = std::min(worst_bnd, v.values[c] - u.values[c]);
    }
    rep.parameters["boundary_margin"] = worst_bnd;
    if (worst_bnd < -hyp_tol) {
      rep.hypotheses_met = false;
      rep.note = "u <= v fails on the boundary layer";
    }
  }
  if (!rep.hypotheses_met) return rep;

  // Verdict over interior nodes; the boundary ordering was a precondition.
  double margin = kInf;
  int worst_node = -1;
  for (int c = 0; c < g.inside_count; ++c) {
    if (!g.is_interior(c)) continue;
    const double gap = v.values[c] - u.values[c];
    if (gap < margin) {
      margin = gap;
      worst_node = c;
    }
  }
  rep.margin = margin;
  rep.passed = margin >= -tol;
  rep.witnesses.push_back({g.describe_node(worst_node), margin});
  return rep;
}

EstimateReport c0_sandwich(const grid::Field& u, const grid::Field& sub,
                           const grid::Field& super, double tol) {
  const grid::Grid& g = *u.grid;
  EstimateReport rep;
  rep.name = "c0_sandwich";
  rep.parameters["tol"] = tol;

  double lower = kInf, upper = kInf;
  int lower_node = -1, upper_node = -1;
  for (int c = 0; c < g.inside_count; ++c) {
    const double lo = u.values[c] - sub.values[c];
    const double hi = super.values[c] - u.values[c];
    if (lo < lower) {
      lower = lo;
      lower_node = c;
    }
    if (hi < upper) {
      upper = hi;
      upper_node = c;
    }
  }
  rep.margin = std::min(lower, upper);
  rep.passed = rep.margin >= -tol;
  rep.parameters["lower_margin"] = lower;
  rep.parameters["upper_margin"] = upper;
  rep.witnesses.push_back({g.describe_node(lower_node), lower});
  rep.witnesses.push_back({g.describe_node(upper_node), upper});
  return rep;
}

EstimateReport gradient_bound_report(const solver::Problem& problem,
                                     const grid::Field& u) {
  const grid::Grid& g = *u.grid;
  EstimateReport rep;
  rep.name = "gradient_bound";

  double sup_tilt = 0.0, sup_tilt_layer = 0.0;
  double sup_speed = 0.0, sup_speed_layer = 0.0;
  int worst_node = -1;
  int skipped_layer = 0;
  for (int c = 0; c < g.inside_count; ++c) {
    geometry::GraphJet jet;
    try {
      jet = grid::fd_jet(u, c);
    } catch (const geometry::SpacelikeViolation&) {
      // Interior jets must be spacelike; degraded sliver stencils on the
      // boundary layer may overshoot and are skipped (counted below).
      if (g.is_interior(c)) {
        rep.hypotheses_met = false;
        rep.note = "solution not spacelike at " + g.describe_node(c);
        return rep;
      }
      ++skipped_layer;
      continue;
    }
    const double speed = jet.du.norm();
    const double tilt = 1.0 / std::sqrt(1.0 - speed * speed);
    if (tilt > sup_tilt) {
      sup_tilt = tilt;
      worst_node = c;
    }
    sup_speed = std::max(sup_speed, speed);
    if (!g.is_interior(c)) {
      sup_tilt_layer = std::max(sup_tilt_layer, tilt);
      sup_speed_layer = std::max(sup_speed_layer, speed);
    }
  }

  // Sampled constants: inf psi and sup |Dpsi| over the box, the solution's
  // realized range, and its realized gradient ball (the unbounded gradient
  // slot is not samplable; the restriction is recorded).
  const VectorXd ext = g.domain.half_extent();
  expr::SampledBounds bounds;
  try {
    bounds = expr::sample_bounds(problem.psi, g.domain.center - ext,
                                 g.domain.center + ext, u.values.minCoeff(),
                                 u.values.maxCoeff(), sup_speed);
  } catch (const expr::PositivityViolation& ex) {
    rep.hypotheses_met = false;
    rep.note = ex.what();
    return rep;
  }
  const double b_const =
      bounds.sup_abs_grad / (problem.k * bounds.inf_psi) + 1e-6;

  double sup_phi = 0.0;
  for (int c = 0; c < g.inside_count; ++c) {
    for (const auto& cut : g.cuts[c]) sup_phi = std::max(sup_phi, std::abs(cut.phi));
  }
  const double diam = g.domain.diameter();
  const double rhs = sup_tilt_layer * std::exp(b_const * (2.0 * sup_phi + diam));

  rep.margin = rhs - sup_tilt;
  rep.passed = rep.margin >= 0.0;
  rep.parameters["B"] = b_const;
  rep.parameters["sup_tilt"] = sup_tilt;
  rep.parameters["sup_tilt_boundary"] = sup_tilt_layer;
  rep.parameters["theta"] = 1.0 - sup_speed;
  rep.parameters["theta0"] = 1.0 - sup_speed_layer;
  rep.parameters["sup_phi"] = sup_phi;
  rep.parameters["diam"] = diam;
  rep.parameters["inf_psi"] = bounds.inf_psi;
  rep.parameters["sup_dpsi"] = bounds.sup_abs_grad;
  rep.parameters["gradient_slot_radius"] = sup_speed;
  rep.parameters["skipped_layer_nodes"] = skipped_layer;
  rep.witnesses.push_back({g.describe_node(worst_node), sup_tilt});
  rep.note = "psi norms sampled over realized gradients only";
  return rep;
}

CurvatureStats interior_curvature_stats(const solver::Problem& problem,
                                        const grid::Field& u, double inset,
                                        double beta) {
  const grid::Grid& g = *u.grid;
  CurvatureStats stats;
  stats.h = g.h;
  stats.inset = inset;
  stats.beta = beta;

  // Affine representative of phi for the weight eta = phi - u.
  VectorXd slope = VectorXd::Zero(g.n());
  double offset = 0.0;
  bool affine_ok = true;
  if (problem.phi.is_affine()) {
    slope = problem.phi.slope;
    offset = problem.phi.offset;
  } else {
    std::vector<VectorXd> xs;
    std::vector<double> vals;
    for (int c = 0; c < g.inside_count; ++c) {
      for (const auto& cut : g.cuts[c]) {
        VectorXd xc = g.node_x_compact(c);
        xc[cut.dir] += cut.sign * cut.frac * g.h;
        xs.push_back(xc);
        vals.push_back(cut.phi);
      }
    }
    const int m = static_cast<int>(xs.size());
    MatrixXd basis(m, g.n() + 1);
    VectorXd rhs(m);
    for (int i = 0; i < m; ++i) {
      basis.row(i).head(g.n()) = xs[i].transpose();
      basis(i, g.n()) = 1.0;
      rhs[i] = vals[i];
    }
    const VectorXd fit =
        (basis.transpose() * basis).ldlt().solve(basis.transpose() * rhs);
    slope = fit.head(g.n());
    offset = fit[g.n()];
    double err = 0.0;
    for (int i = 0; i < m; ++i) {
      err = std::max(err, std::abs(slope.dot(xs[i]) + offset - vals[i]));
    }
    if (err > 1e-8 * (1.0 + std::abs(offset))) {
      affine_ok = false;
      stats.note = "phi has no affine representative; weighted monitor skipped";
    }
  }

  stats.eta_positive = affine_ok;
  for (int c = 0; c < g.inside_count; ++c) {
    geometry::GraphJet jet;
    try {
      jet = grid::fd_jet(u, c);
    } catch (const geometry::SpacelikeViolation&) {
      if (g.is_interior(c)) throw;
      stats.note = "boundary-layer jets skipped at degraded stencils";
      continue;
    }
    const double kmax = geometry::frame(jet).kappa[0];
    stats.sup_all = std::max(stats.sup_all, kmax);
    if (!g.is_interior(c)) stats.sup_layer = std::max(stats.sup_layer, kmax);
    const VectorXd x = g.node_x_compact(c);
    if (g.domain.boundary_distance(x) >= inset) {
      stats.sup_inset = std::max(stats.sup_inset, kmax);
    }
    if (affine_ok) {
      const double eta = slope.dot(x) + offset - u.values[c];
      if (eta <= 0.0 && g.is_interior(c)) {
        stats.eta_positive = false;
        stats.note = "eta = phi - u non-positive at " + g.describe_node(c) +
                     "; weighted monitor skipped";
      } else if (eta > 0.0) {
        stats.sup_weighted =
            std::max(stats.sup_weighted, std::pow(eta, beta) * kmax);
      }
    }
  }
  stats.ratio = stats.sup_all / (1.0 + stats.sup_layer);
  return stats;
}

EstimateReport interior_curvature_report(const CurvatureStats& stats) {
  EstimateReport rep;
  rep.name = "interior_curvature";
  rep.passed = std::isfinite(stats.sup_all);
  rep.hypotheses_met = true;
  rep.margin = 0.0;
  rep.parameters["h"] = stats.h;
  rep.parameters["inset"] = stats.inset;
  rep.parameters["beta"] = stats.beta;
  rep.parameters["sup_inset"] = stats.sup_inset;
  rep.parameters["sup_all"] = stats.sup_all;
  rep.parameters["sup_layer"] = stats.sup_layer;
  rep.parameters["sup_weighted"] = stats.sup_weighted;
  rep.parameters["ratio"] = stats.ratio;
  if (!stats.eta_positive) rep.note = stats.note;
  return rep;
}

EstimateReport interior_curvature_refinement(const CurvatureStats& coarse,
                                             const CurvatureStats& fine,
                                             double window) {
  EstimateReport rep;
  rep.name = "interior_curvature_refinement";
  auto rel_change = [](double a, double b) {
    return std::abs(b - a) / (1e-12 + std::abs(a));
  };
  const double c_inset = rel_change(coarse.sup_inset, fine.sup_inset);
  const double c_ratio = rel_change(coarse.ratio, fine.ratio);
  rep.parameters["change_sup_inset"] = c_inset;
  rep.parameters["change_ratio"] = c_ratio;
  rep.parameters["window"] = window;
  rep.parameters["coarse_h"] = coarse.h;
  rep.parameters["fine_h"] = fine.h;
  double worst = std::max(c_inset, c_ratio);
  if (coarse.eta_positive && fine.eta_positive) {
    const double c_weighted = rel_change(coarse.sup_weighted, fine.sup_weighted);
    rep.parameters["change_weighted"] = c_weighted;
    worst = std::max(worst, c_weighted);
  } else {
    rep.note = "weighted monitor unavailable on one member";
  }
  rep.margin = window - worst;
  rep.passed = rep.margin >= 0.0;
  return rep;
}

EstimateReport identity_suite(const std::vector<geometry::GraphJet>& samples, int k) {
  EstimateReport rep;
  rep.name = "identity_suite";
  rep.parameters["k"] = k;
  rep.parameters["samples"] = static_cast<double>(samples.size());

  IdentityAccumulator acc;
  std::vector<VectorXd> kappas;
  kappas.reserve(samples.size());
  VectorXd prev;
  int index = 0;
  for (const auto& jet : samples) {
    const VectorXd kappa = geometry::frame(jet).kappa;
    if (!symfun::in_gamma(k, kappa).in_cone) {
      rep.hypotheses_met = false;
      rep.note = "sample " + std::to_string(index) + " is not k-admissible";
      return rep;
    }
    run_identities(kappa, k, index, acc, prev.size() ? &prev : nullptr);
    prev = kappa;
    kappas.push_back(kappa);
    ++index;
  }
  rep.parameters["semiconvexity_K"] = geometry::semiconvexity_constant(kappas);
  rep.margin = acc.worst;
  rep.passed = acc.worst >= 0.0;
  if (acc.worst_index >= 0) {
    rep.witnesses.push_back(
        {acc.worst_name + "@" + std::to_string(acc.worst_index), acc.worst});
  }
  return rep;
}

EstimateReport identity_suite_synthetic(int n, int k, int count, std::uint64_t seed,
                                        double tail) {
  EstimateReport rep;
  rep.name = "identity_suite_synthetic";
  rep.parameters["n"] = n;
  rep.parameters["k"] = k;
  rep.parameters["samples"] = count;

  sampling::Rng rng(seed);
  IdentityAccumulator acc;
  VectorXd prev;
  for (int i = 0; i < count; ++i) {
    VectorXd kappa = sampling::sample_gamma_k(n, k, rng, tail);
    std::stable_sort(kappa.data(), kappa.data() + n, std::greater<double>());
    run_identities(kappa, k, i, acc, prev.size() ? &prev : nullptr);
    prev = kappa;
  }
  rep.margin = acc.worst;
  rep.passed = acc.worst >= 0.0;
  if (acc.worst_index >= 0) {
    rep.witnesses.push_back(
        {acc.worst_name + "@" + std::to_string(acc.worst_index), acc.worst});
  }
  return rep;
}

std::string LuProbeResult::to_json() const {
  json j;
  j["best_delta_prime"] = best_delta_prime;
  j["sweep"] = json::array();
  for (const auto& p : sweep) {
    j["sweep"].push_back(json{{"delta_prime", p.delta_prime},
                              {"violations", p.violations},
                              {"worst_slack", p.worst_slack}});
  }
  return j.dump();
}

LuProbeResult lu_inequality_probe(int k, int n, int l, double epsilon, double delta,
                                  double delta0, int trials, std::uint64_t seed) {
  if (l < 1 || l >= k || k > n) {
    throw std::invalid_argument("lu_inequality_probe: need 1 <= l < k <= n");
  }
  sampling::Rng rng(seed);
  LuProbeResult result;
  const double floor_entry = -double(n - k) / k;  // cone lower bound at kappa_1 = 1

  for (double dprime = 1.0; dprime >= 1e-3; dprime *= 0.5) {
    LuProbePoint point;
    point.delta_prime = dprime;
    point.worst_slack = kInf;
    int produced = 0;
    int attempts = 0;
    while (produced < trials && attempts < trials * 200) {
      ++attempts;
      VectorXd kappa(n);
      kappa[0] = 1.0;
      for (int i = 1; i < l; ++i) kappa[i] = rng.uniform(delta, 1.0);
      for (int i = l; i < n; ++i) {
        kappa[i] = rng.uniform(std::min(floor_entry, dprime), dprime);
      }
      std::stable_sort(kappa.data() + 1, kappa.data() + n, std::greater<double>());
      if (l > 1 && kappa[l - 1] < delta) continue;
      if (kappa[l] > dprime) continue;
      if (!symfun::in_gamma(k, kappa).in_cone) continue;
      ++produced;

      VectorXd xi = rng.normal_vec(n);
      if (produced == 1) xi.setZero();  // the exact equality case
      const double lhs = symfun::lu_quadratic(k, kappa, xi);
      const double sk = symfun::sigma(k, kappa);
      const VectorXd grad = symfun::sigma_grad(k, kappa);
      double tail_term = 0.0;
      for (int i = l; i < n; ++i) tail_term += grad[i] * xi[i] * xi[i];
      const double rhs =
          (1.0 - epsilon) * xi[0] * xi[0] / (kappa[0] * kappa[0]) -
          delta0 * tail_term / (kappa[0] * sk);
      const double slack = lhs - rhs;
      point.worst_slack = std::min(point.worst_slack, slack);
      if (slack < -1e-12 * (1.0 + std::abs(lhs) + std::abs(rhs))) {
        ++point.violations;
      }
    }
    if (produced < trials) {
      point.violations = -1;  // sampling starved; constraint set too thin
    }
    result.sweep.push_back(point);
    if (point.violations == 0 && result.best_delta_prime == 0.0) {
      result.best_delta_prime = dprime;
    }
  }
  return result;
}

}  // namespace sigmak::verify
