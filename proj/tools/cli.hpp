#pragma once

// Command-line front end. run() does everything except touching stdout and
// stderr, so tests can drive it in-process.

#include <string>
#include <vector>

namespace em4lab::cli {

struct Outcome {
  int exit_code = 0;  // 0 all checks pass, 1 a check failed, 2 input error
  std::string output;
  std::string error;
};

/// args excludes the program name.
Outcome run(const std::vector<std::string>& args);

}  // namespace em4lab::cli
