#include "hazardlab/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace hazardlab;
  CLI::App app{"hazardlab: latent hazard mechanisms, aggregation and model bridges"};
  app.set_version_flag("--version", std::string(kLibraryVersion));

  cli::RunConfig config;
  std::string scenario;
  std::vector<std::string> tols;
  std::vector<double> points;
  std::uint64_t seed = 0;
  double t_max = 0.0;
  double step = 0.0;

  app.add_option("command", config.command, "Command to run")
      ->required()
      ->check(CLI::IsMember(cli::command_names()));
  auto* scenario_opt = app.add_option("--scenario", scenario, "Scenario JSON file");
  app.add_option("--out", config.output_dir, "Output directory")->capture_default_str();
  auto* t_max_opt = app.add_option("--t-max", t_max, "Grid horizon");
  auto* step_opt = app.add_option("--step", step, "Grid step");
  auto* points_opt = app.add_option("--grid-points", points, "Explicit grid points (overrides --t-max/--step)")
                         ->delimiter(',');
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--tol", tols, "Tolerance override NAME=VALUE (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : cli::kExitInputError;
  }

  if (*scenario_opt) config.scenario_path = scenario;
  if (*t_max_opt) config.t_max = t_max;
  if (*step_opt) config.step = step;
  if (*points_opt) config.grid_points = points;
  if (*seed_opt) config.seed = seed;
  try {
    for (const auto& t : tols) cli::parse_tolerance(t, config.tolerances);
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return cli::kExitInputError;
  }
  return cli::run(config, std::cerr);
}
