#include "sigmak/app.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "sigmak/sampling.hpp"
#include "sigmak/symfun.hpp"

namespace sigmak::app {

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

double now_unix() {
  return std::chrono::duration<double>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

Eigen::VectorXd vec_from(const json& arr, int expect, const char* what) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != expect) {
    throw std::runtime_error(std::string("config: ") + what + " must be an array of " +
                             std::to_string(expect) + " numbers");
  }
  Eigen::VectorXd v(expect);
  for (int i = 0; i < expect; ++i) v[i] = arr[i].get<double>();
  return v;
}

grid::Domain parse_domain(const json& j, int n) {
  grid::Domain d;
  d.n = n;
  const std::string shape = j.at("shape").get<std::string>();
  if (shape == "ball") {
    d.shape = grid::Shape::Ball;
    d.size = Eigen::VectorXd::Constant(1, j.at("radius").get<double>());
  } else if (shape == "box") {
    d.shape = grid::Shape::Box;
    d.size = vec_from(j.at("half_widths"), n, "half_widths");
  } else if (shape == "ellipsoid") {
    d.shape = grid::Shape::Ellipsoid;
    d.size = vec_from(j.at("semi_axes"), n, "semi_axes");
  } else {
    throw std::runtime_error("config: unknown domain shape '" + shape + "'");
  }
  d.center = j.contains("center") ? vec_from(j.at("center"), n, "center")
                                  : Eigen::VectorXd::Zero(n);
  d.validate();
  return d;
}

expr::PsiSpec parse_psi(const json& j, int n, int k) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "constant") return expr::PsiSpec::constant(j.at("value").get<double>());
  if (kind == "hyperboloid") {
    return expr::PsiSpec::hyperboloid_curvature(n, k, j.at("radius").get<double>());
  }
  if (kind == "expr") return expr::PsiSpec::expression(j.at("text").get<std::string>());
  throw std::runtime_error("config: unknown psi kind '" + kind + "'");
}

grid::BoundaryData parse_phi(const json& j, int n) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine") {
    return grid::BoundaryData::affine(vec_from(j.at("slope"), n, "phi slope"),
                                      j.at("offset").get<double>());
  }
  if (kind == "expr") {
    return grid::BoundaryData::expression(j.at("text").get<std::string>());
  }
  throw std::runtime_error("config: unknown phi kind '" + kind + "'");
}

json config_echo(const RunConfig& c) {
  json e;
  e["n"] = c.domain.n;
  e["k"] = c.k;
  e["h"] = c.h_list;
  e["seed"] = c.seed;
  e["psi"] = expr::to_string(c.psi.ast);
  if (c.phi.is_affine()) {
    e["phi"] = {{"slope", std::vector<double>(c.phi.slope.data(),
                                              c.phi.slope.data() + c.phi.slope.size())},
                {"offset", c.phi.offset}};
  } else {
    e["phi"] = expr::to_string(*c.phi.ast);
  }
  return e;
}

std::string status_name(solver::SolveStatus s) {
  switch (s) {
    case solver::SolveStatus::Converged: return "converged";
    case solver::SolveStatus::Nonconvergence: return "nonconvergence";
    case solver::SolveStatus::ConeExit: return "cone_exit";
    case solver::SolveStatus::InitFailure: return "init_failure";
  }
  return "unknown";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Reports of one verify pass; exit 3 iff some report failed with its
// hypotheses intact.
struct ReportSet {
  std::vector<verify::EstimateReport> reports;
  std::vector<std::string> extra;  // raw JSON entries (probes)

  void add(verify::EstimateReport r) { reports.push_back(std::move(r)); }

  bool all_ok() const {
    for (const auto& r : reports) {
      if (r.hypotheses_met && !r.passed) return false;
    }
    return true;
  }

  std::string to_json() const {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(json::parse(r.to_json()));
    for (const auto& e : extra) arr.push_back(json::parse(e));
    return arr.dump(2);
  }
};

// Runs one report builder; a thrown hypothesis violation (bad jets, broken
// positivity) degrades to a hypotheses-not-met report instead of aborting
// the whole verify pass.
template <typename Fn>
verify::EstimateReport guarded(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& ex) {
    verify::EstimateReport r;
    r.name = name;
    r.hypotheses_met = false;
    r.note = ex.what();
    return r;
  }
}

ReportSet run_reports(const RunConfig& config, const solver::Problem& problem,
                      const grid::Field& u, bool quiet) {
  ReportSet set;
  const double tol = 10.0 * problem.options.tol_residual;

  if (config.verify_identities) {
    set.add(guarded("identity_suite", [&] {
      std::vector<geometry::GraphJet> jets;
      for (int c = 0; c < problem.grid->inside_count; ++c) {
        if (problem.grid->is_interior(c)) jets.push_back(grid::fd_jet(u, c));
      }
      return verify::identity_suite(jets, problem.k);
    }));
  }
  if (config.verify_gradient_bound) {
    set.add(guarded("gradient_bound",
                    [&] { return verify::gradient_bound_report(problem, u); }));
  }

  const bool can_compare = !problem.psi.depends_on_p();
  if ((config.verify_c0 || config.verify_comparison) && can_compare) {
    grid::Field sub;
    bool have_sub = false;
    try {
      sub = solver::initial_guess(problem);
      have_sub = true;
    } catch (const solver::InitFailure& ex) {
      verify::EstimateReport r;
      r.name = "c0_sandwich";
      r.hypotheses_met = false;
      r.note = ex.what();
      set.add(r);
    }
    const auto upper = solver::mean_curvature_supersolution(problem);
    if (upper.status != solver::SolveStatus::Converged) {
      verify::EstimateReport r;
      r.name = "comparison";
      r.hypotheses_met = false;
      r.note = "mean-curvature companion solve did not converge: " + upper.message;
      set.add(r);
    } else {
      if (config.verify_comparison) {
        set.add(guarded("comparison", [&] {
          const auto mean_rhs = solver::mean_curvature_problem(problem).psi;
          return verify::comparison_check(u, upper.u, 1, mean_rhs, tol);
        }));
      }
      if (config.verify_c0 && have_sub) {
        set.add(guarded("c0_sandwich", [&] {
          const auto sub_rep = solver::check_subsolution(problem, sub);
          auto rep = verify::c0_sandwich(u, sub, upper.u, tol);
          rep.parameters["subsolution_margin"] = sub_rep.margin;
          if (!sub_rep.is_subsolution) {
            rep.hypotheses_met = false;
            rep.note = "constructed start failed the subsolution check";
          }
          return rep;
        }));
      }
    }
  } else if (config.verify_c0 || config.verify_comparison) {
    verify::EstimateReport r;
    r.name = "comparison";
    r.hypotheses_met = false;
    r.note = "psi depends on the gradient; companion construction skipped";
    set.add(r);
  }

  set.add(guarded("interior_curvature", [&] {
    return verify::interior_curvature_report(verify::interior_curvature_stats(
        problem, u, config.curvature_inset, config.curvature_beta));
  }));

  if (!quiet) {
    for (const auto& r : set.reports) {
      std::cout << (r.hypotheses_met ? (r.passed ? "[PASS] " : "[FAIL] ")
                                     : "[SKIP] ")
                << r.name << " margin=" << r.margin
                << (r.note.empty() ? "" : "  (" + r.note + ")") << "\n";
    }
  }
  return set;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& ex) {
    throw std::runtime_error(std::string("config: JSON parse error: ") + ex.what());
  }
  RunConfig c;
  const int n = j.at("n").get<int>();
  c.k = j.at("k").get<int>();
  c.domain = parse_domain(j.at("domain"), n);
  if (j.contains("h_list")) {
    c.h_list = j.at("h_list").get<std::vector<double>>();
  } else if (j.contains("h")) {
    c.h_list = {j.at("h").get<double>()};
  } else {
    throw std::runtime_error("config: need h or h_list");
  }
  if (c.h_list.empty()) throw std::runtime_error("config: empty h_list");
  c.psi = parse_psi(j.at("psi"), n, c.k);
  c.phi = parse_phi(j.at("phi"), n);
  if (!j.contains("seed")) {
    throw std::runtime_error("config: seed is mandatory (sampled reports must be reproducible)");
  }
  c.seed = j.at("seed").get<std::uint64_t>();

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    auto& o = c.options;
    if (s.contains("tol_residual")) o.tol_residual = s.at("tol_residual").get<double>();
    if (s.contains("max_newton")) o.max_newton = s.at("max_newton").get<int>();
    if (s.contains("homotopy_steps")) o.homotopy_steps = s.at("homotopy_steps").get<int>();
    if (s.contains("backtrack_factor")) o.backtrack_factor = s.at("backtrack_factor").get<double>();
    if (s.contains("max_backtracks")) o.max_backtracks = s.at("max_backtracks").get<int>();
    if (s.contains("linear_tol")) o.linear_tol = s.at("linear_tol").get<double>();
    if (s.contains("dense_threshold")) o.dense_threshold = s.at("dense_threshold").get<int>();
    if (s.contains("trace")) o.collect_trace = s.at("trace").get<bool>();
  }
  if (j.contains("verify")) {
    const json& v = j.at("verify");
    if (v.contains("gradient_bound")) c.verify_gradient_bound = v.at("gradient_bound").get<bool>();
    if (v.contains("c0_sandwich")) c.verify_c0 = v.at("c0_sandwich").get<bool>();
    if (v.contains("comparison")) c.verify_comparison = v.at("comparison").get<bool>();
    if (v.contains("identities")) c.verify_identities = v.at("identities").get<bool>();
    if (v.contains("identity_samples")) c.identity_samples = v.at("identity_samples").get<int>();
    if (v.contains("identity_tail")) c.identity_tail = v.at("identity_tail").get<double>();
    if (v.contains("curvature_inset")) c.curvature_inset = v.at("curvature_inset").get<double>();
    if (v.contains("curvature_beta")) c.curvature_beta = v.at("curvature_beta").get<double>();
    if (v.contains("lu_probe")) {
      const json& lp = v.at("lu_probe");
      RunConfig::LuProbeConfig probe;
      if (lp.contains("l")) probe.l = lp.at("l").get<int>();
      if (lp.contains("epsilon")) probe.epsilon = lp.at("epsilon").get<double>();
      if (lp.contains("delta")) probe.delta = lp.at("delta").get<double>();
      if (lp.contains("delta0")) probe.delta0 = lp.at("delta0").get<double>();
      if (lp.contains("trials")) probe.trials = lp.at("trials").get<int>();
      c.lu_probe = probe;
    }
  }
  if (j.contains("exact_u")) {
    c.exact_u = expr::parse(j.at("exact_u").get<std::string>());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::shared_ptr<const grid::Grid> make_grid(const RunConfig& config, double h) {
  return std::make_shared<const grid::Grid>(grid::build_grid(config.domain, h, config.phi));
}

solver::Problem make_problem(const RunConfig& config, double h) {
  solver::Problem p;
  p.grid = make_grid(config, h);
  p.k = config.k;
  p.psi = config.psi;
  p.phi = config.phi;
  p.options = config.options;
  return p;
}

double max_error_vs_exact(const RunConfig& config, const grid::Field& u) {
  if (!config.exact_u) return std::nan("");
  double worst = 0.0;
  expr::Env env;
  env.p = Eigen::VectorXd::Zero(u.grid->n());
  for (int c = 0; c < u.grid->inside_count; ++c) {
    env.x = u.grid->node_x_compact(c);
    worst = std::max(worst, std::abs(u.values[c] - expr::eval(*config.exact_u, env)));
  }
  return worst;
}

std::string summary_json(const RunConfig& config, const solver::SolveState& state,
                         double max_error, double wall_seconds) {
  json s;
  s["config"] = config_echo(config);
  s["status"] = status_name(state.status);
  s["message"] = state.message;
  s["t"] = state.t;
  s["residual_norm"] = state.residual_norm;
  s["newton_iters"] = state.newton_iters;
  s["min_cone_margin"] = state.min_cone_margin;
  s["min_spacelike_margin"] = state.min_spacelike_margin;
  s["unknowns"] = state.u.grid ? state.u.grid->inside_count : 0;
  if (std::isfinite(max_error)) s["max_error"] = max_error;
  s["timestamp"] = {{"unix_seconds", now_unix()}, {"wall_seconds", wall_seconds}};
  return s.dump(2);
}

int cmd_solve(const RunConfig& config, const std::string& out_dir, bool quiet) {
  try {
    const auto t0 = std::chrono::steady_clock::now();
    solver::Problem problem = make_problem(config, config.h_list.front());
    solver::validate_problem(problem);
    const auto state = solver::solve(problem);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(out_dir);
    if (state.u.grid) {
      grid::dump_field_csv(state.u, out_dir + "/solution.csv");
      grid::dump_classification_csv(*state.u.grid, out_dir + "/classification.csv");
    }
    std::ostringstream trace;
    for (const auto& line : state.trace) trace << line << "\n";
    write_text(out_dir + "/trace.jsonl", trace.str());
    const double err = max_error_vs_exact(config, state.u);
    write_text(out_dir + "/summary.json", summary_json(config, state, err, wall));

    if (!quiet) {
      std::cout << "status: " << status_name(state.status)
                << "  residual: " << state.residual_norm
                << "  iters: " << state.newton_iters;
      if (std::isfinite(err)) std::cout << "  max_error: " << err;
      std::cout << "\n";
    }
    if (state.status == solver::SolveStatus::Converged) return 0;
    std::cerr << "solve: " << state.message << "\n";
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}

int cmd_verify(const RunConfig& config, const std::string& solution_csv,
               const std::string& out_dir, bool quiet) {
  try {
    fs::create_directories(out_dir);
    ReportSet set;

    if (config.lu_probe && config.lu_probe->l < config.k) {
      const auto& lp = *config.lu_probe;
      const auto probe =
          verify::lu_inequality_probe(config.k, config.domain.n, lp.l, lp.epsilon,
                                      lp.delta, lp.delta0, lp.trials, config.seed);
      json pj = json::parse(probe.to_json());
      pj["name"] = "lu_probe";
      set.extra.push_back(pj.dump());
    }

    if (solution_csv.empty()) {
      // Solution-independent suites only.
      if (config.verify_identities) {
        set.add(verify::identity_suite_synthetic(config.domain.n, config.k,
                                                 config.identity_samples, config.seed,
                                                 config.identity_tail));
      }
    } else {
      solver::Problem problem = make_problem(config, config.h_list.front());
      solver::validate_problem(problem);
      grid::Field u;
      try {
        u = grid::load_field_csv(problem.grid, solution_csv);
      } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
      }
      set = run_reports(config, problem, u, quiet);
      if (config.verify_identities) {
        set.add(verify::identity_suite_synthetic(config.domain.n, config.k,
                                                 config.identity_samples, config.seed,
                                                 config.identity_tail));
      }
    }

    write_text(out_dir + "/reports.json", set.to_json());
    return set.all_ok() ? 0 : 3;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}

int cmd_sweep(const RunConfig& config, const std::string& out_dir, bool quiet) {
  try {
    if (config.h_list.size() < 2) {
      std::cerr << "error: sweep needs at least two grid spacings\n";
      return 1;
    }
    fs::create_directories(out_dir);
    json table = json::array();
    std::vector<verify::CurvatureStats> stats;
    std::vector<double> errors;
    bool all_converged = true;

    for (double h : config.h_list) {
      solver::Problem problem = make_problem(config, h);
      solver::validate_problem(problem);
      const auto state = solver::solve(problem);
      json row;
      row["h"] = h;
      row["unknowns"] = problem.grid->inside_count;
      row["status"] = status_name(state.status);
      row["residual_norm"] = state.residual_norm;
      if (state.status != solver::SolveStatus::Converged) {
        all_converged = false;
        table.push_back(row);
        break;
      }
      const double err = max_error_vs_exact(config, state.u);
      if (std::isfinite(err)) {
        row["max_error"] = err;
        errors.push_back(err);
      }
      const auto cs = verify::interior_curvature_stats(problem, state.u,
                                                       config.curvature_inset,
                                                       config.curvature_beta);
      stats.push_back(cs);
      row["kappa_inset"] = cs.sup_inset;
      row["kappa_layer"] = cs.sup_layer;
      row["weighted_sup"] = cs.sup_weighted;
      row["ratio"] = cs.ratio;
      if (config.verify_gradient_bound) {
        const auto gb = verify::gradient_bound_report(problem, state.u);
        row["gradient_margin"] = gb.margin;
        if (gb.hypotheses_met && !gb.passed) all_converged = false;
      }
      table.push_back(row);
      if (!quiet) std::cout << row.dump() << "\n";
    }

    json out;
    out["rows"] = table;
    json ratios = json::array();
    for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
      ratios.push_back(errors[i] / errors[i + 1]);
    }
    out["error_ratios"] = ratios;
    json refine = json::array();
    bool stable = true;
    for (std::size_t i = 0; i + 1 < stats.size(); ++i) {
      const auto rep = verify::interior_curvature_refinement(stats[i], stats[i + 1]);
      refine.push_back(json::parse(rep.to_json()));
      if (!rep.passed) stable = false;
    }
    out["refinement"] = refine;
    write_text(out_dir + "/sweep.json", out.dump(2));

    if (!quiet && !ratios.empty()) {
      std::cout << "error ratios: " << ratios.dump() << "\n";
    }
    return (all_converged && stable) ? 0 : 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
}

int cmd_oracle(const std::string& name) {
  std::cout.precision(15);
  if (name == "subset-sigma") {
    Eigen::VectorXd kappa(4);
    kappa << 2, 3, 5, 7;
    // Subset enumeration, independent of the recurrence implementation.
    double total = 0.0;
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        for (int c = b + 1; c < 4; ++c) total += kappa[a] * kappa[b] * kappa[c];
      }
    }
    std::cout << "sigma_3(2,3,5,7) by subset enumeration = " << total << "\n";
    std::cout << "sigma_3(2,3,5,7) by recurrence         = "
              << symfun::sigma(3, kappa) << "\n";
    return 0;
  }
  if (name == "umbilic-frame") {
    Eigen::VectorXd x(2);
    x << 0.6, 0.0;
    const auto jet = geometry::hyperboloid_jet(1.0, x, Eigen::VectorXd::Zero(2));
    const auto f = geometry::frame(jet);
    std::cout << "kappa at x=(0.6,0), R=1: (" << f.kappa[0] << ", " << f.kappa[1]
              << ")  expected (1, 1)\n";
    return 0;
  }
  if (name == "maclaurin") {
    Eigen::VectorXd kappa(3);
    kappa << 1, 2, 3;
    const auto chain = symfun::maclaurin_chain(3, kappa);
    std::cout << "power-mean chain of (1,2,3): (" << chain[0] << ", " << chain[1]
              << ", " << chain[2] << ")\n";
    return 0;
  }
  if (name == "fd-jacobian") {
    const auto phi = grid::BoundaryData::expression("sqrt(1+x1^2+x2^2)");
    grid::Domain d;
    d.n = 2;
    d.shape = grid::Shape::Ball;
    d.size = Eigen::VectorXd::Constant(1, 0.7);
    d.center = Eigen::VectorXd::Zero(2);
    solver::Problem p;
    p.grid = std::make_shared<const grid::Grid>(grid::build_grid(d, 0.7 / 8, phi));
    p.k = 2;
    p.psi = expr::PsiSpec::constant(1.0);
    p.phi = phi;
    const auto u = grid::Field::sample(p.grid, [](const Eigen::VectorXd& xx) {
      return std::sqrt(1.0 + xx.squaredNorm());
    });
    const auto jac = solver::linearize(p, u);
    sampling::Rng rng(31415);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd v(p.grid->inside_count);
      for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
      v /= v.norm();
      const double eps = 3e-6;
      grid::Field up = u, dn = u;
      up.values += eps * v;
      dn.values -= eps * v;
      const Eigen::VectorXd fd =
          (solver::residual(p, up).values - solver::residual(p, dn).values) /
          (2.0 * eps);
      const Eigen::VectorXd an = jac * v;
      worst = std::max(worst, (fd - an).norm() / (1.0 + an.norm()));
    }
    std::cout << "max relative gap, analytic Jacobian vs central differences: "
              << worst << "  (10 random directions)\n";
    return 0;
  }
  if (name == "radial-ode") {
    // Mean-curvature graph over a ball with constant right-hand side:
    // v' = w^3 (rhs - (n-1) v / (rho w)), v = u', w = sqrt(1 - v^2).
    const int n = 2;
    const double radius = 0.7, rhs = 2.0, phi_const = std::sqrt(1.49);
    const int steps = 200000;
    const double dr = radius / steps;
    double v = 0.0;
    double drop = 0.0;  // integral of v from 0 to radius
    for (int i = 0; i < steps; ++i) {
      const double rho = (i + 0.5) * dr;
      const double w2 = 1.0 - v * v;
      const double slope = std::pow(w2, 1.5) * (rhs - (n - 1) * v / (rho * std::sqrt(w2)));
      const double v_mid = v + 0.5 * dr * slope;
      const double w2m = 1.0 - v_mid * v_mid;
      const double slope_mid =
          std::pow(w2m, 1.5) * (rhs - (n - 1) * v_mid / (rho * std::sqrt(w2m)));
      drop += dr * (v + 0.5 * dr * slope_mid);
      v += dr * slope_mid;
    }
    std::cout << "radial sigma_1 = " << rhs << " on ball r=" << radius
              << ": u(0) = " << phi_const - drop << ", u'(r) = " << v
              << "  (exact hyperboloid: u(0) = 1, u'(r) = " << 0.7 / std::sqrt(1.49)
              << ")\n";
    return 0;
  }
  std::cerr << "error: unknown oracle '" << name
            << "' (try subset-sigma, umbilic-frame, fd-jacobian, maclaurin, radial-ode)\n";
  return 1;
}

}  // namespace sigmak::app
