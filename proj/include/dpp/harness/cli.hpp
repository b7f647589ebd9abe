#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dpp {

// Exit codes: 0 success, 1 invalid usage/configuration/input, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitRuntime = 2;

// args excludes the program name.
int cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(int argc, char** argv);

}  // namespace dpp
