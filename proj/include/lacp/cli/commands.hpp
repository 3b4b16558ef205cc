#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lacp::cli {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kSuccess = 0, kRuntimeFailure = 1, kUsageError = 2 };

/// Runs the `lacp` command line. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lacp::cli
