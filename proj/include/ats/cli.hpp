#pragma once

#include <iosfwd>

namespace ats {

/// Exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitEmptyInput = 2,
  kExitMissingFile = 3,
  kExitInvalidConfig = 4,
  kExitInsufficientData = 5,
  kExitFailure = 1,
};

/// Entry point of the `ats` tool; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ats
