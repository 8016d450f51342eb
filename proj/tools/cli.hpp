#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cola::cli {

/// Exit codes. Failures also print one line to `err`:
///   error: <error_class>: <message>
enum ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kFormat = 4,
  kAdaptation = 5,
};

/// Runs one `cola` subcommand. Reports go to --report, or to `out` when no
/// report path is given; logs go to stderr.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cola::cli
