#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rumour::cli {

/// Runs one command line (without the program name). Returns the exit
/// status: 0 success, 1 validation or usage error, 2 runtime failure.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rumour::cli
