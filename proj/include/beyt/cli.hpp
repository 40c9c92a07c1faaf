#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace beyt::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 2,
  kStaleArtifact = 3,
  kNumericalFailure = 4,
};

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace beyt::cli
