#pragma once

#include <string>
#include <vector>

namespace depo::cli {

// Exit codes, one per error class (documented in --help):
inline constexpr int kExitOk = 0;
inline constexpr int kExitMalformedGroup = 1;
inline constexpr int kExitUnreadableInput = 2;
inline constexpr int kExitGrmUnavailable = 3;
inline constexpr int kExitDiverged = 4;

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name.
int run(const std::vector<std::string>& args);

}  // namespace depo::cli
