#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vesselq::cli {

enum ExitCode : int { ok = 0, usage = 1, input = 2, computation = 3 };

/// Runs the command line `args` (without the program name). Diagnostics go to `err`,
/// tables and summaries to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vesselq::cli
