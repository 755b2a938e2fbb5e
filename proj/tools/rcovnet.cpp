#include <CLI11.hpp>
#include <iostream>

#include "rcov/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Realized covariance forecasting: simulation, baselines and a ConvLSTM forecaster"};
  app.set_version_flag("--version", std::string(RCOV_VERSION));

  std::string command;
  rcov::cli::RunOptions opts;
  std::uint64_t seed = 0;
  app.add_option("command", command, "simulate | train | evaluate | ablate | compare | convert")
      ->required()
      ->check(CLI::IsMember({"simulate", "train", "evaluate", "ablate", "compare", "convert"}));
  app.add_option("--config", opts.config_path, "INI configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "overrides simulation.seed and train.seed");
  app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", opts.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rcov::cli::kConfigError;
  }
  if (*seed_opt) opts.seed = seed;
  return rcov::cli::run_command(command, opts);
}
