#pragma once

#include <string>
#include <vector>

namespace volleymc {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;  // data rule violations / unknown teams
inline constexpr int kExitIoError = 2;     // unreadable or unparseable files
inline constexpr int kExitConfig = 3;      // bad flags or configuration values

// Runs the command-line interface on argv-style arguments (program name
// excluded, natural order).  Never throws; every failure maps onto one of
// the exit codes above with a message on stderr.
int run_cli(const std::vector<std::string>& args);

}  // namespace volleymc
