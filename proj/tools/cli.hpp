#pragma once

#include <ostream>

namespace colluder::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kSuccess = 0;
inline constexpr int kInputError = 1;
inline constexpr int kNegative = 2;

/// Runs one colluder-lab invocation; `argv[0]` is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace colluder::cli
