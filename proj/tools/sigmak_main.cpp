#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "sigmak/app.hpp"

int main(int argc, char** argv) {
  CLI::App cli{"sigma_k curvature Dirichlet solver and estimate laboratory"};
  cli.require_subcommand(1);

  std::string config_path, out_dir = "out", solution_path, oracle_name;
  bool quiet = false;
  std::int64_t seed_override = -1;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) {
      sub->add_option("--config", config_path, "JSON run configuration")->required();
    }
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_flag("--quiet", quiet, "suppress progress output");
  };

  CLI::App* solve = cli.add_subcommand("solve", "run one Dirichlet solve");
  add_common(solve, true);

  CLI::App* verify = cli.add_subcommand("verify", "run estimate reports");
  add_common(verify, true);
  verify->add_option("--solution", solution_path,
                     "solution CSV (omit for solution-independent suites)");

  CLI::App* sweep = cli.add_subcommand("sweep", "refinement sweep over h_list");
  add_common(sweep, true);

  CLI::App* oracle = cli.add_subcommand("oracle", "print brute-force reference values");
  oracle->add_option("name", oracle_name, "oracle name")->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (oracle->parsed()) return sigmak::app::cmd_oracle(oracle_name);

    sigmak::app::RunConfig config = sigmak::app::load_config(config_path);
    if (seed_override >= 0) config.seed = static_cast<std::uint64_t>(seed_override);

    if (solve->parsed()) return sigmak::app::cmd_solve(config, out_dir, quiet);
    if (verify->parsed()) {
      return sigmak::app::cmd_verify(config, solution_path, out_dir, quiet);
    }
    if (sweep->parsed()) return sigmak::app::cmd_sweep(config, out_dir, quiet);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 1;
}
