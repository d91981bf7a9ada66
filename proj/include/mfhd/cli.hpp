#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mfhd {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitInputError = 2,
  kExitDegenerateTest = 3,
};

/// Entry point of the `mfhd` tool. Results go to `out`, progress and warnings
/// to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Same, with arguments excluding the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mfhd
