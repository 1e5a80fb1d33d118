#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cacherag {

// Runs the command line (without the program name). Returns the process exit
// code: 0 success, 1 user error, 2 internal error.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err);

}  // namespace cacherag
