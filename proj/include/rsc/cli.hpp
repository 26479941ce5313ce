#pragma once

#include <string>
#include <vector>

namespace rsc {

enum ExitCode { ExitSuccess = 0, ExitConfigError = 2, ExitRuntimeError = 3 };

// Entry point of the rsc command-line tool; args exclude the program name.
int run_cli(const std::vector<std::string>& args);

} // namespace rsc
