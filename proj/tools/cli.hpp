#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace keydyn::cli {

/// Exit codes: 0 success, 1 validation failure (or a rejected session for
/// `auth`), 2 bad arguments, 3 internal error.
enum ExitCode : int { kOk = 0, kValidation = 1, kBadArgs = 2, kInternal = 3 };

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace keydyn::cli
