#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace resloss::cli {

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kDataError = 3,
  kNumericalError = 4,
};

/// Runs the command line `args` (args[0] is the program name). Diagnostics go
/// to `err`, JSON printed by `loss-eval` goes to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace resloss::cli
