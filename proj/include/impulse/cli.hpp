#pragma once

// Command-line front end. Exit codes: 0 success, 1 failed check or simulation,
// 2 usage or parse error.

#include <iosfwd>
#include <string>
#include <vector>

namespace impulse {

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace impulse
