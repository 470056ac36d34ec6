#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace jsm::cli {

enum ExitCode : int { kOk = 0, kIoError = 1, kUsage = 2, kNumerical = 3 };

/// Runs one CLI invocation; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jsm::cli
