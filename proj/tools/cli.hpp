#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"

namespace blindcal::cli {

/// Flags shared by every subcommand. Flags take precedence over config keys.
struct CommonOptions {
  std::string config_path;
  /// Result CSV; companion files (vectors, secondary tables) are written next
  /// to it as <stem>_<name>.csv.
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  bool resume = false;
  bool timing = false;
};

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kSolveError = 2,
  kCheckFailed = 3,
  kCellsFailed = 4,
};

/// <dir>/<stem>_<name>.csv for out = <dir>/<stem>.<ext>.
std::string companion_path(const std::string& out, const std::string& name);

int cmd_recover(const Json& config, const CommonOptions& opts, std::ostream& log);
int cmd_sweep(const Json& config, const CommonOptions& opts, std::ostream& log);
int cmd_analyze(const Json& config, const CommonOptions& opts, std::ostream& log);
int cmd_linearized(const Json& config, const CommonOptions& opts, std::ostream& log);
int cmd_tomo2d(const Json& config, const CommonOptions& opts, std::ostream& log);

/// Parses argv, dispatches to the subcommand and maps errors to exit codes.
int run_cli(int argc, char** argv, std::ostream& log, std::ostream& err);

}  // namespace blindcal::cli
