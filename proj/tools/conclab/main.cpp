#include "conclab/app.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App cli{"conclab: profile decompositions on manifolds of bounded geometry"};
  cli.require_subcommand(1);

  std::string run_config;
  std::string out_dir;
  double spacing = 0.0;
  int kmax = 0;
  bool quiet = false;
  auto* run = cli.add_subcommand("run", "Run a scenario and write its report");
  run->set_help_flag("--help", "Print this help message and exit");
  run->add_option("config", run_config, "Scenario JSON")->required();
  auto* out_opt = run->add_option("--out", out_dir, "Output directory");
  auto* h_opt = run->add_option("--h", spacing, "Lattice spacing override");
  auto* k_opt = run->add_option("--kmax", kmax, "Drop schedule entries above K");
  run->add_flag("--quiet", quiet, "No summary table");

  std::string validate_config;
  auto* validate = cli.add_subcommand("validate", "Check a scenario config and print it with defaults");
  validate->add_option("config", validate_config, "Scenario JSON")->required();

  std::string scenario_dir = CONCLAB_SCENARIO_DIR;
  auto* list = cli.add_subcommand("list-scenarios", "List the built-in scenarios");
  list->add_option("--dir", scenario_dir, "Scenario directory");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : conclab::app::kConfigError;
  }

  if (*run) {
    conclab::app::RunOptions opts;
    if (*out_opt) opts.out = out_dir;
    if (*h_opt) opts.spacing = spacing;
    if (*k_opt) opts.kmax = kmax;
    opts.quiet = quiet;
    return conclab::app::run(run_config, opts, std::cout, std::cerr);
  }
  if (*validate) return conclab::app::validate(validate_config, std::cout, std::cerr);
  for (const auto& name : conclab::app::list_scenarios(scenario_dir)) std::cout << name << "\n";
  return 0;
}
