#pragma once

#include <string>
#include <vector>

namespace tcr {

inline constexpr const char* kToolVersion = "tcrecon 0.1.0";

// Entry point shared by the binary and the tests. Returns the process exit
// code: 0 success, 2 usage/config error, 3 numerical failure.
int run_cli(const std::vector<std::string>& args);

} // namespace tcr
