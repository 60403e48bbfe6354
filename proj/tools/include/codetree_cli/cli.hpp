#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace codetree::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kResource = 3,
  kUsage = 64,
};

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace codetree::cli
