#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flatness::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitDegraded = 3;  // some fit reported multistart disagreement

inline constexpr const char* kVersion = "0.1.0";

/// Runs one command line (without the program name). Messages go to `out`/`err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flatness::cli
