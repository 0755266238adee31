#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thermadl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `thermadl` binary. args excludes the program name.
// Subcommands: generate, featurize, train, evaluate, predict.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

std::string tool_version();

}  // namespace thermadl::cli
