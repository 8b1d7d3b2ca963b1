#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sigmak/solver.hpp"
#include "sigmak/verify.hpp"

namespace sigmak::app {

/// One run description, loaded from a JSON config file. See the README for
/// the schema.
struct RunConfig {
  grid::Domain domain;
  int k = 2;
  std::vector<double> h_list;  // single entry for plain solves
  expr::PsiSpec psi;
  grid::BoundaryData phi;
  solver::SolverOptions options;
  std::uint64_t seed = 0;

  bool verify_gradient_bound = true;
  bool verify_c0 = true;
  bool verify_comparison = true;
  bool verify_identities = true;
  int identity_samples = 10000;
  double identity_tail = 0.0;  // > 0: heavier-tailed cone proposals (stress)
  double curvature_inset = 0.15;
  double curvature_beta = 4.0;

  struct LuProbeConfig {
    int l = 1;
    double epsilon = 0.1;
    double delta = 1.0 / 3.0;
    double delta0 = 0.5;
    int trials = 400;
  };
  std::optional<LuProbeConfig> lu_probe;  // concavity probe, off by default

  std::optional<expr::ExprAst> exact_u;  // closed-form reference, if any
};

/// Parses a config file; throws std::runtime_error with a readable message.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text);

/// Exit codes: 0 converged, 1 configuration error, 2 reported
/// nonconvergence. Writes solution.csv, trace.jsonl, summary.json.
int cmd_solve(const RunConfig& config, const std::string& out_dir, bool quiet);

/// Runs the requested estimate reports against a stored solution
/// (solution_csv empty: only solution-independent suites). Exit codes:
/// 0 all passed or hypotheses-not-met, 1 config/grid mismatch, 3 failures.
/// Writes reports.json.
int cmd_verify(const RunConfig& config, const std::string& solution_csv,
               const std::string& out_dir, bool quiet);

/// Solve + verify per grid spacing; emits the convergence table and the
/// refinement-stability reports. Needs >= 2 spacings. Writes sweep.json.
int cmd_sweep(const RunConfig& config, const std::string& out_dir, bool quiet);

/// Brute-force provenance oracles: subset-sigma, umbilic-frame, fd-jacobian,
/// maclaurin, radial-ode. Exit 1 on unknown name.
int cmd_oracle(const std::string& name);

/// Helpers shared with the acceptance suite.
std::shared_ptr<const grid::Grid> make_grid(const RunConfig& config, double h);
solver::Problem make_problem(const RunConfig& config, double h);
double max_error_vs_exact(const RunConfig& config, const grid::Field& u);
std::string summary_json(const RunConfig& config, const solver::SolveState& state,
                         double max_error, double wall_seconds);

}  // namespace sigmak::app
