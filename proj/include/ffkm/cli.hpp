#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ffkm::cli {

/// Exit codes of the command-line tool.
enum Exit : int {
    ok = 0,
    failure = 1,
    usage = 2,
    bad_input = 3,
    numerical = 4,
};

/**
 * Runs one command. `args` excludes the program name. Normal output goes to
 * `out`; diagnostics and the error JSON go to `err`.
 */
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int main(int argc, char** argv);

}  // namespace ffkm::cli
