#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace flexact::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitInfeasible = 3;

/// Output directory variable consulted when --out is absent.
inline constexpr const char* kOutEnv = "FLEXACT_OUT";

/// Runs `flexact <subcommand> [options]`. `args` excludes the program name.
/// Errors are reported on `err` as a single JSON object.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flexact::cli
