#pragma once

#include <string>
#include <vector>

namespace wsvae::cli {

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name. Returns the process exit code: 0 success, 2 argument or
/// validation errors, 1 runtime failures.
int run(const std::vector<std::string>& args);

}  // namespace wsvae::cli
