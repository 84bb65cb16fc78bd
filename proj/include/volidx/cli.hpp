#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volidx::cli {

/// Runs the command line `args` (without the program name). Returns the
/// process exit code: 0 on success, 1 on a runtime failure, 2 on a usage
/// error. Diagnostics go to `err` as a single line.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace volidx::cli
