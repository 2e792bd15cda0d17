#pragma once

#include <iosfwd>

namespace nfde::cli {

/// Exit status contract: 0 all checks pass, 1 some check fails, 2 input error.
enum ExitCode : int { kPass = 0, kCheckFailure = 1, kInputError = 2 };

/// Entry point of the `nfde` command; subcommands validate, analyze,
/// simulate, compare, invert.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nfde::cli
