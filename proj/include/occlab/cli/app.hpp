#pragma once

#include "occlab/cli/config.hpp"

#include <ostream>
#include <string>

namespace occlab::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kConfigError = 2, kNumericalFailure = 3 };

/// Runs one subcommand and writes its tables, reports, config.resolved.json and
/// manifest.json into `cfg.output`. Returns false when `all` ran and a criterion failed.
bool run(const std::string& subcommand, const Config& cfg, std::ostream& log);

/// The `occlab` command line: parses flags, loads the config, runs, and maps errors to
/// exit codes (2 config, 3 numerical failure, 1 anything else).
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace occlab::cli
