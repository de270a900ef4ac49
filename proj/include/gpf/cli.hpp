#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gpf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 2;  // malformed JSON, invalid model, bad arguments
inline constexpr int kExitCheckFailed = 3;
inline constexpr int kExitRuntimeError = 4;  // e.g. conditioning on a null event

// Runs one CLI invocation (arguments exclude the program name). Result JSON
// goes to `out`, diagnostics to `err`.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace gpf
