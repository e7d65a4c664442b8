#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace harq::cli {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kOutDirEnv = "HARQ_OUT_DIR";
inline constexpr const char* kPresetDirEnv = "HARQ_PRESET_DIR";

enum ExitCode : int {
  kExitOk = 0,
  kExitAssertion = 1,
  kExitConfig = 2,
  kExitRuntime = 3,
};

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// HARQ_OUT_DIR when set, else "harq_out".
[[nodiscard]] std::string default_output_dir();

}  // namespace harq::cli
