// Acceptance suite: runs every headline check end to end and prints one
// pass/fail line per criterion. Exit code = number of failed criteria.
//
// Usage: acceptance [config_dir] [work_dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sigmak/app.hpp"
#include "sigmak/sampling.hpp"
#include "sigmak/symfun.hpp"
#include "sigmak/verify.hpp"

using namespace sigmak;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

void report(int number, const std::string& what, bool ok, double seconds,
            const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s) [%.2f s]\n", ok ? "PASS" : "FAIL",
              number, what.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

std::uint64_t pair_seed(int n, int k) { return 900000 + 100 * n + k; }

// A solved problem kept around for the estimate criteria.
struct RunArtifact {
  std::string name;
  app::RunConfig config;
  solver::Problem problem;
  solver::SolveState state;
};

// ---------------------------------------------------------------- 1..4

void criteria_symmetric_functions() {
  const int samples = 10000;
  const double tol_rel = 1e-12;

  {  // Criterion 1: Euler, trace, expansion identities.
    Timer t;
    double worst = 0.0;
    for (int n = 1; n <= 6; ++n) {
      for (int k = 1; k <= n; ++k) {
        sampling::Rng rng(pair_seed(n, k));
        for (int s = 0; s < samples; ++s) {
          const VectorXd kappa = sampling::sample_gamma_k(n, k, rng);
          const double sk = symfun::sigma(k, kappa);
          const VectorXd g = symfun::sigma_grad(k, kappa);
          worst = std::max(worst, std::abs(kappa.dot(g) - k * sk) /
                                      (1.0 + std::abs(sk)));
          const double skm1 = symfun::sigma(k - 1, kappa);
          worst = std::max(worst, std::abs(g.sum() - (n - k + 1) * skm1) /
                                      (1.0 + std::abs(skm1)));
          for (int i = 0; i < n; ++i) {
            VectorXd rest(n - 1);
            for (int q = 0, w = 0; q < n; ++q) {
              if (q != i) rest[w++] = kappa[q];
            }
            const double tail = (k <= n - 1) ? symfun::sigma(k, rest) : 0.0;
            worst = std::max(worst, std::abs(sk - (kappa[i] * g[i] + tail)) /
                                        (1.0 + std::abs(sk)));
          }
        }
      }
    }
    const double sec = t.seconds();
    report(1, "Euler/trace/expansion identities, 10^4 Gamma_k samples per (n,k), n<=6",
           worst <= tol_rel && sec < 5.0,
           sec, fmt("worst relative error %.3g, need <= 1e-12", worst));
  }

  {  // Criterion 2: power-mean chain monotone; equality on constant vectors.
    Timer t;
    double worst_gap = 1.0;  // min of chain[j-1] - chain[j] + tol
    double worst_const = 0.0;
    for (int n = 1; n <= 6; ++n) {
      for (int k = 1; k <= n; ++k) {
        sampling::Rng rng(pair_seed(n, k));
        for (int s = 0; s < samples; ++s) {
          const VectorXd kappa = sampling::sample_gamma_k(n, k, rng);
          const VectorXd chain = symfun::maclaurin_chain(k, kappa);
          for (int j = 1; j < k; ++j) {
            worst_gap = std::min(worst_gap, chain[j - 1] - chain[j] + tol_rel);
          }
        }
        for (double c : {0.5, 1.0, 2.0}) {
          const VectorXd chain =
              symfun::maclaurin_chain(k, VectorXd::Constant(n, c));
          for (int j = 0; j < k; ++j) {
            worst_const = std::max(worst_const, std::abs(chain[j] - c));
          }
        }
      }
    }
    const double sec = t.seconds();
    report(2, "power-mean chain non-increasing; equality on constant vectors",
           worst_gap >= 0.0 && worst_const <= tol_rel && sec < 5.0, sec,
           fmt("worst slack %.3g, constant-vector error %.3g", worst_gap,
               worst_const));
  }

  {  // Criterion 3: negative-entry lower bound, hard tolerance 1e-10.
    Timer t;
    double worst = 1.0;
    for (int n = 1; n <= 6; ++n) {
      for (int k = 1; k <= n; ++k) {
        sampling::Rng rng(pair_seed(n, k));
        for (int s = 0; s < samples; ++s) {
          VectorXd kappa = sampling::sample_gamma_k(n, k, rng);
          std::stable_sort(kappa.data(), kappa.data() + n, std::greater<double>());
          worst = std::min(worst, kappa[n - 1] +
                                      (double(n - k) / k) * kappa[0] + 1e-10);
        }
      }
    }
    const double sec = t.seconds();
    report(3, "negative-entry bound kappa_min >= -(n-k)/k kappa_max on all samples",
           worst >= 0.0, sec, fmt("worst slack %.3g, hard floor -1e-10", worst));
  }

  {  // Criterion 4: midpoint concavity of sigma_k^{1/k} on random pairs.
    Timer t;
    double worst = 1.0;
    for (int n = 1; n <= 6; ++n) {
      for (int k = 1; k <= n; ++k) {
        sampling::Rng rng(pair_seed(n, k) + 50);
        for (int s = 0; s < samples; ++s) {
          const VectorXd a = sampling::sample_gamma_k(n, k, rng);
          const VectorXd b = sampling::sample_gamma_k(n, k, rng);
          const double mid = std::pow(symfun::sigma(k, 0.5 * (a + b)), 1.0 / k);
          const double avg = 0.5 * (std::pow(symfun::sigma(k, a), 1.0 / k) +
                                    std::pow(symfun::sigma(k, b), 1.0 / k));
          worst = std::min(worst, mid - avg + 1e-12);
        }
      }
    }
    const double sec = t.seconds();
    report(4, "midpoint concavity of sigma_k^{1/k}, 10^4 pairs per (n,k)",
           worst >= 0.0, sec, fmt("worst slack %.3g, allowance -1e-12", worst));
  }
}

// ------------------------------------------------------------------- 5

void criterion_umbilic() {
  Timer t;
  double worst = 0.0;
  sampling::Rng rng(424242);
  for (double radius : {0.5, 1.0, 2.0}) {
    for (int n : {2, 3}) {
      for (int s = 0; s < 100; ++s) {
        VectorXd x = rng.normal_vec(n);
        x *= rng.uniform(0.0, 1.5 * radius) / x.norm();
        const auto jet = geometry::hyperboloid_jet(radius, x, VectorXd::Zero(n));
        const VectorXd kappa = geometry::frame(jet).kappa;
        for (int i = 0; i < n; ++i) {
          worst = std::max(worst, std::abs(kappa[i] - 1.0 / radius));
        }
      }
    }
  }
  const double sec = t.seconds();
  report(5, "umbilic frames: kappa_i = 1/R on analytic jets, R in {0.5,1,2}, n in {2,3}",
         worst <= 1e-8 && sec < 1.0, sec,
         fmt("worst |kappa - 1/R| = %.3g, need <= 1e-8", worst));
}

// ---------------------------------------------------------------- 6..10

std::vector<RunArtifact> g_runs;          // sweep members + 3d + catalog
std::vector<verify::CurvatureStats> g_sweep_stats;

void criterion_sweep_2d(const std::string& config_dir) {
  Timer t;
  bool ok = true;
  std::string detail;
  std::vector<double> errors;
  try {
    const auto cfg = app::load_config(config_dir + "/hyperboloid2d_sweep.json");
    for (double h : cfg.h_list) {
      auto problem = app::make_problem(cfg, h);
      const auto state = solver::solve(problem);
      if (state.status != solver::SolveStatus::Converged) {
        ok = false;
        detail = "h=" + std::to_string(h) + " did not converge: " + state.message;
        break;
      }
      errors.push_back(app::max_error_vs_exact(cfg, state.u));
      g_sweep_stats.push_back(verify::interior_curvature_stats(
          problem, state.u, cfg.curvature_inset, cfg.curvature_beta));
      g_runs.push_back({"sweep_h" + std::to_string(h), cfg, std::move(problem), state});
    }
    if (ok) {
      for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
        const double ratio = errors[i] / errors[i + 1];
        if (ratio < 3.2 || ratio > 4.8) ok = false;
        detail += (i ? ", " : "") + fmt("ratio %.2f", ratio);
      }
      detail += fmt(", finest max error %.2e", errors.back());
    }
  } catch (const std::exception& ex) {
    ok = false;
    detail = ex.what();
  }
  const double sec = t.seconds();
  if (sec >= 30.0) ok = false;
  report(6, "manufactured Dirichlet sweep n=2 k=2: h^2 convergence, ratios in [3.2,4.8]",
         ok, sec, detail + ", budget 30 s");
}

void criterion_solve_3d(const std::string& config_dir) {
  Timer t;
  bool ok = true;
  std::string detail;
  try {
    const auto cfg = app::load_config(config_dir + "/hyperboloid3d.json");
    auto problem = app::make_problem(cfg, cfg.h_list.front());
    const auto state = solver::solve(problem);
    if (state.status != solver::SolveStatus::Converged) {
      ok = false;
      detail = "did not converge: " + state.message;
    } else {
      const double err = app::max_error_vs_exact(cfg, state.u);
      ok = err <= 0.02;
      detail = fmt("max error %.4g, need <= 0.02", err);
      g_runs.push_back({"hyperboloid3d", cfg, std::move(problem), state});
    }
  } catch (const std::exception& ex) {
    ok = false;
    detail = ex.what();
  }
  const double sec = t.seconds();
  if (sec >= 600.0) ok = false;
  report(7, "manufactured Dirichlet solve n=3 k=2 on the 17^3 grid", ok, sec,
         detail + ", budget 600 s");
}

void criterion_gradient_bound(const std::string& config_dir) {
  Timer t;
  bool ok = true;
  std::string detail;
  try {
    for (const char* name :
         {"catalog/psi_x1.json", "catalog/psi_x2.json", "catalog/psi_u_rational.json",
          "catalog/psi_u_exp.json", "catalog/psi_xu_mixed.json"}) {
      const auto cfg = app::load_config(config_dir + "/" + name);
      auto problem = app::make_problem(cfg, cfg.h_list.front());
      const auto state = solver::solve(problem);
      if (state.status != solver::SolveStatus::Converged) {
        ok = false;
        detail = std::string(name) + " did not converge";
        break;
      }
      g_runs.push_back({name, cfg, std::move(problem), state});
    }
    double worst = 1e300;
    if (ok) {
      for (const auto& run : g_runs) {
        const auto rep = verify::gradient_bound_report(run.problem, run.state.u);
        if (!rep.hypotheses_met || !rep.passed || rep.margin <= 0.0) {
          ok = false;
          detail = run.name + ": margin " + fmt("%.3g", rep.margin);
          break;
        }
        worst = std::min(worst, rep.margin);
      }
      if (ok) {
        detail = fmt("positive margin on %.0f runs, smallest %.3g",
                     double(g_runs.size()), worst);
      }
    }
  } catch (const std::exception& ex) {
    ok = false;
    detail = ex.what();
  }
  report(8, "tilt bound sup w <= (boundary sup) exp[B (2 sup|phi| + diam)] on all runs",
         ok, t.seconds(), detail);
}

void criterion_sandwich() {
  Timer t;
  bool ok = true;
  std::string detail;
  double worst = 1e300;
  try {
    for (const auto& run : g_runs) {
      const double tol = 10.0 * run.problem.options.tol_residual;
      const auto sub = solver::initial_guess(run.problem);
      const auto sub_rep = solver::check_subsolution(run.problem, sub);
      if (!sub_rep.is_subsolution) {
        ok = false;
        detail = run.name + ": constructed start is not a subsolution";
        break;
      }
      const auto upper = solver::mean_curvature_supersolution(run.problem);
      if (upper.status != solver::SolveStatus::Converged) {
        ok = false;
        detail = run.name + ": companion solve failed";
        break;
      }
      const auto c0 = verify::c0_sandwich(run.state.u, sub, upper.u, tol);
      const auto mean_rhs = solver::mean_curvature_problem(run.problem).psi;
      const auto cmp =
          verify::comparison_check(run.state.u, upper.u, 1, mean_rhs, tol);
      if (!c0.passed || !(cmp.passed && cmp.hypotheses_met)) {
        ok = false;
        detail = run.name + fmt(": c0 margin %.3g, comparison margin %.3g",
                                c0.margin, cmp.margin);
        break;
      }
      worst = std::min(worst, std::min(c0.margin, cmp.margin));
    }
    if (ok) {
      detail = fmt("bracketed on %.0f runs, smallest margin %.3g at tol 10*solver_tol",
                   double(g_runs.size()), worst);
    }
  } catch (const std::exception& ex) {
    ok = false;
    detail = ex.what();
  }
  report(9, "C0 sandwich and comparison bracket every converged solution", ok,
         t.seconds(), detail);
}

void criterion_curvature_stability() {
  Timer t;
  bool ok = g_sweep_stats.size() >= 2;
  std::string detail = ok ? "" : "sweep artifacts missing";
  double worst = 1e300;
  for (std::size_t i = 0; ok && i + 1 < g_sweep_stats.size(); ++i) {
    const auto rep = verify::interior_curvature_refinement(g_sweep_stats[i],
                                                           g_sweep_stats[i + 1]);
    if (!rep.passed) {
      ok = false;
      detail = fmt("refinement %d exceeded the 20%% window, margin %.3g",
                   double(i), rep.margin);
    }
    worst = std::min(worst, rep.margin);
  }
  if (ok) {
    detail = fmt("inset kappa_max and eta^4 kappa_max stable, worst margin %.3g",
                 worst);
  }
  report(10, "interior curvature and weighted monitor stable under refinement", ok,
         t.seconds(), detail);
}

// ------------------------------------------------------------------ 11

void criterion_jacobian() {
  Timer t;
  bool ok = true;
  double worst = 0.0;
  std::string detail;
  try {
    const auto phi = grid::BoundaryData::expression("sqrt(1+x1^2+x2^2)");
    grid::Domain d;
    d.n = 2;
    d.shape = grid::Shape::Ball;
    d.size = VectorXd::Constant(1, 0.7);
    d.center = VectorXd::Zero(2);
    solver::Problem p;
    p.grid = std::make_shared<const grid::Grid>(grid::build_grid(d, 0.7 / 8, phi));
    p.k = 2;
    p.psi = expr::PsiSpec::constant(1.0);
    p.phi = phi;

    sampling::Rng rng(555);
    for (int state_i = 0; state_i < 3 && ok; ++state_i) {
      const double ax = rng.uniform(0.8, 1.9), ay = rng.uniform(0.6, 1.5);
      const double amp = rng.uniform(0.01, 0.03);
      const auto u = grid::Field::sample(p.grid, [&](const VectorXd& x) {
        return std::sqrt(1.0 + x.squaredNorm()) +
               amp * std::cos(ax * x[0]) * std::cos(ay * x[1]);
      });
      const auto jac = solver::linearize(p, u);
      for (int dir = 0; dir < 10; ++dir) {
        VectorXd v(p.grid->inside_count);
        for (int i = 0; i < v.size(); ++i) v[i] = rng.normal();
        v /= v.norm();
        const double eps = 3e-6;
        grid::Field up = u, dn = u;
        up.values += eps * v;
        dn.values -= eps * v;
        const VectorXd fd =
            (solver::residual(p, up).values - solver::residual(p, dn).values) /
            (2.0 * eps);
        const VectorXd an = jac * v;
        worst = std::max(worst, (fd - an).norm() / (1.0 + an.norm()));
      }
    }
    ok = ok && worst <= 1e-6;
    detail = fmt("worst relative gap %.3g over 3 states x 10 directions", worst);
  } catch (const std::exception& ex) {
    ok = false;
    detail = ex.what();
  }
  report(11, "analytic Jacobian matches finite differences within 1e-6", ok,
         t.seconds(), detail);
}

// ------------------------------------------------------------------ 12

std::string random_expression(sampling::Rng& rng, int depth) {
  if (depth == 0) {
    switch (static_cast<int>(rng.uniform() * 6)) {
      case 0: return "x1";
      case 1: return "x2";
      case 2: return "u";
      case 3: return "p1";
      case 4: return "p2";
      default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", rng.uniform(0.2, 2.0));
        return buf;
      }
    }
  }
  const std::string a = random_expression(rng, depth - 1);
  const std::string b = random_expression(rng, depth - 1);
  switch (static_cast<int>(rng.uniform() * 10)) {
    case 0: return "(" + a + "+" + b + ")";
    case 1: return "(" + a + "-" + b + ")";
    case 2: return "(" + a + "*" + b + ")";
    case 3: return "(" + a + "/(2+(" + b + ")*(" + b + ")))";
    case 4: return "sin(" + a + ")";
    case 5: return "cos(" + a + ")";
    case 6: return "exp(0.3*(" + a + "))";
    case 7: return "log(1.5+(" + a + ")*(" + a + "))";
    case 8: return "sqrt(0.5+(" + a + ")*(" + a + "))";
    default: return "(" + a + ")^2";
  }
}

void criterion_expressions() {
  Timer t;
  bool ok = true;
  double worst = 0.0;
  int tested = 0;
  std::string detail;
  try {
    sampling::Rng rng(31337);
    while (tested < 100) {
      const std::string text = random_expression(rng, 3);
      const auto ast = expr::parse(text);

      // Round trip: print, reparse, compare structurally.
      const auto reparsed = expr::parse(expr::to_string(ast));
      if (!expr::structurally_equal(ast, reparsed)) {
        ok = false;
        detail = "round trip changed: " + text;
        break;
      }

      expr::Env env;
      env.x = Eigen::Vector2d(rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8));
      env.u = rng.uniform(-0.8, 0.8);
      env.p = Eigen::Vector2d(rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6));
      expr::EvalResult r;
      try {
        r = expr::eval_with_partials(ast, env);
      } catch (const expr::EvalError&) {
        continue;  // guarded generator missed a singular point; redraw
      }
      if (!std::isfinite(r.value)) continue;

      const double step = 1e-5;
      auto slot_check = [&](double* slot, double analytic) {
        const double saved = *slot;
        *slot = saved + step;
        const double plus = expr::eval(ast, env);
        *slot = saved - step;
        const double minus = expr::eval(ast, env);
        *slot = saved;
        const double fd = (plus - minus) / (2.0 * step);
        worst = std::max(worst,
                         std::abs(fd - analytic) / (1.0 + std::abs(fd)));
      };
      slot_check(&env.x[0], r.dx[0]);
      slot_check(&env.x[1], r.dx[1]);
      slot_check(&env.u, r.du);
      slot_check(&env.p[0], r.dp[0]);
      slot_check(&env.p[1], r.dp[1]);
      ++tested;
    }
    ok = ok && worst <= 1e-7;
    if (detail.empty()) {
      detail = fmt("worst relative derivative gap %.3g over %.0f expressions",
                   worst, double(tested));
    }
  } catch (const std::exception& ex) {
    ok = false;
    detail = ex.what();
  }
  report(12, "expression partials match central differences; print-parse idempotent",
         ok, t.seconds(), detail);
}

// ------------------------------------------------------------------ 13

void criterion_determinism(const std::string& config_dir, const std::string& work) {
  Timer t;
  bool ok = true;
  std::string detail;
  try {
    const auto cfg = app::load_config(config_dir + "/hyperboloid2d.json");
    const std::string d1 = work + "/det1", d2 = work + "/det2";
    if (app::cmd_solve(cfg, d1, true) != 0 || app::cmd_solve(cfg, d2, true) != 0) {
      ok = false;
      detail = "solve failed";
    } else {
      std::ifstream a(d1 + "/summary.json"), b(d2 + "/summary.json");
      json ja = json::parse(a), jb = json::parse(b);
      ja.erase("timestamp");
      jb.erase("timestamp");
      ok = ja.dump() == jb.dump();
      detail = ok ? "summaries identical modulo the timestamp field"
                  : "summaries differ";
    }
  } catch (const std::exception& ex) {
    ok = false;
    detail = ex.what();
  }
  report(13, "repeated runs with a fixed seed give identical summaries", ok,
         t.seconds(), detail);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string config_dir = argc > 1 ? argv[1] : "configs";
  const std::string work =
      argc > 2 ? argv[2]
               : (fs::temp_directory_path() / "sigmak_acceptance").string();
  fs::create_directories(work);

  criteria_symmetric_functions();
  criterion_umbilic();
  criterion_sweep_2d(config_dir);
  criterion_solve_3d(config_dir);
  criterion_gradient_bound(config_dir);
  criterion_sandwich();
  criterion_curvature_stability();
  criterion_jacobian();
  criterion_expressions();
  criterion_determinism(config_dir, work);

  std::printf("%d of 13 criteria passed\n", 13 - g_failures);
  return g_failures;
}
