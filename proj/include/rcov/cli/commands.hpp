#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace rcov::cli {

/// Exit codes of the rcovnet tool.
enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

struct RunOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  // overrides simulation.seed and train.seed
  std::string out_dir = "out";
  int threads = 1;
};

/// Each command writes its outputs plus manifest.json under out_dir and
/// throws rcov::Error subclasses on failure.
void cmd_simulate(const RunOptions& opts);
void cmd_train(const RunOptions& opts);
void cmd_evaluate(const RunOptions& opts);
void cmd_ablate(const RunOptions& opts);
void cmd_compare(const RunOptions& opts);
void cmd_convert(const RunOptions& opts);

/// Runs `command` and maps exceptions to exit codes, reporting on stderr.
int run_command(const std::string& command, const RunOptions& opts);

}  // namespace rcov::cli
