#pragma once

#include <string>
#include <vector>

namespace bbis::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kEstimationFailure = 2 };

/// Entry point shared by the executable and the tests. args[0] is the
/// program name.
int run(const std::vector<std::string>& args);

}  // namespace bbis::cli
