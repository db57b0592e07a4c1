// chpf: batch front end for the counter-hypothetical particle filter experiments.
//
//   chpf run experiment.json
//   chpf compare out/summary.csv other/summary.csv
//   chpf make-scenario planar-kidnap --seed 7 --out kidnap.chpf
//   chpf presets
//
// CHPF_LOG=quiet|info|debug controls progress output.

#include <iostream>

#include <CLI11.hpp>

#include "chpf/experiment.hpp"
#include "chpf/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Counter-hypothetical particle filter experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a (strategy x seed) grid from a JSON config");
  run->add_option("config", config_path, "Experiment config file")->required();

  std::vector<std::string> summaries;
  auto* compare = app.add_subcommand("compare", "Tabulate means from summary.csv files");
  compare->add_option("summaries", summaries, "summary.csv files")->required();

  std::string preset;
  std::uint64_t seed = 0;
  std::string out_path;
  auto* make = app.add_subcommand("make-scenario", "Write a preset scenario container");
  make->add_option("preset", preset, "Preset name (see `chpf presets`)")->required();
  make->add_option("--seed", seed, "Scenario seed")->required();
  make->add_option("--out", out_path, "Output path")->required();

  auto* presets = app.add_subcommand("presets", "List built-in scenario presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const chpf::LogLevel level = chpf::log_level_from_env();
  if (run->parsed()) return chpf::run_command(config_path, std::cout, std::cerr, level);
  if (compare->parsed()) {
    std::vector<std::filesystem::path> paths(summaries.begin(), summaries.end());
    return chpf::compare_command(paths, std::cout, std::cerr);
  }
  if (make->parsed()) return chpf::make_scenario_command(preset, seed, out_path, std::cout, std::cerr);
  if (presets->parsed()) {
    for (const auto& name : chpf::preset_names()) std::cout << name << '\n';
    return 0;
  }
  return 1;
}
