#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace eadl::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kContract = 3 };

// Runs one subcommand. `args` excludes the program name. Reports go to `out`; the run
// log (first line: the resolved configuration as JSON) and errors go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace eadl::cli
