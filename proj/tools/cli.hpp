#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gapseg::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsage = 1,
  kIo = 2,
  kInternal = 3,
};

// Runs one command line (without the program name). "-" as a path means the
// given in/out streams.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err);

}  // namespace gapseg::cli
