#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace onebit::cli {

// Entry point for the command-line tool; args excludes the program name.
// Exit codes: 0 success/converged, 1 input error, 2 non-convergence,
// 3 divergence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace onebit::cli
