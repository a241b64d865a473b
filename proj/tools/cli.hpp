#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bgc::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kPrecondition = 3,
  kAnalysis = 4,
};

/// Default output directory when --out is not given.
inline constexpr const char* kOutputDirEnv = "BGC_OUTPUT_DIR";

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace bgc::cli
