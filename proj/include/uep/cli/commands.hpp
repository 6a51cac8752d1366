#pragma once

#include <ostream>

namespace uep::cli {

/// Exit codes shared by every command.
enum ExitCode : int { kSuccess = 0, kMethodFailure = 1, kInputError = 2 };

/// Entry point of the uep-solve command line. Diagnostics go to `err`,
/// human-readable summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uep::cli
