#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lte::cli {

/// Runs the `lte` command line. Returns 0 on success, 2 on usage errors and 1 on
/// runtime failures (a JSON error object is written to `err`).
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace lte::cli
