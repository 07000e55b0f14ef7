#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specobs::cli {

/// Environment variable that overrides the configured cache directory (the
/// --cache flag overrides both).
inline constexpr const char* kCacheEnv = "SPECTRAL_OBSTACLE_CACHE";

/// Exit codes.
inline constexpr int kPass = 0;
inline constexpr int kVerificationFailed = 1;
inline constexpr int kUsageError = 2;
inline constexpr int kNumericalFailure = 3;

/// spectral-obstacle <subcommand> --config FILE [--plot] [--jobs K]
///                   [--cache DIR] [--out DIR]
/// Results go to `out`, diagnostics to `err`; returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specobs::cli
