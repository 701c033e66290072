#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace pbs::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kNumeric = 3,
    kVerifyFailed = 4,
};

// args excludes the program name. Results go to `out` (or --out), diagnostics
// to `err`, one line per problem.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbs::cli
