#pragma once

namespace isodimer {

inline constexpr const char* kVersion = "1.0.0";

// Exit codes: 0 ok, 2 invalid input or configuration, 3 numerical failure,
// 4 acceptance failure in `verify`.
int run_cli(int argc, char** argv);

}  // namespace isodimer
