#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace undermine::cli {

/// Runs the command line `args` (without the program name) and returns the
/// process exit status: 0 ok, 2 configuration, 3 data, 4 model error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace undermine::cli
