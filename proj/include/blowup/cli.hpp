#pragma once

#include <map>
#include <ostream>
#include <string>

namespace blowup {

// Exit codes are a stable contract.
inline constexpr int kExitPass = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitHypotheses = 2;
inline constexpr int kExitVerdict = 3;

/// Verdict thresholds, all overridable with --tol name=value.
std::map<std::string, double> default_thresholds();

/// Entry point of the blowup tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace blowup
