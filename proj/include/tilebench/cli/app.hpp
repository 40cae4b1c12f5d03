#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tilebench/core/errors.hpp"

namespace tilebench::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitNumeric = 4;

int exit_code(ErrorKind kind);

// Full command line (args[0] is the program name). Diagnostics go to `err` as
// one line; the return value is the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tilebench::cli
