#pragma once

#include <string>
#include <vector>

namespace ineat {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_io = 3, exit_divergence = 4 };

// Entry point of the `ineat` tool; args excludes the program name. Progress
// goes to stderr, results only to files.
int run_cli(const std::vector<std::string>& args);

} // namespace ineat
