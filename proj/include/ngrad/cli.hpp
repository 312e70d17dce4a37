#pragma once

#include <string>
#include <vector>

namespace ngrad::cli {

/// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kNumericError = 3;
inline constexpr int kIoError = 4;

/// Dispatches one subcommand (meanfield, fisher-probe, train, unit-coeffs,
/// rerun). `args` excludes the program name. Every run writes its CSV outputs
/// plus a manifest.json into the output directory; `rerun <manifest>` replays
/// a manifest and reproduces the CSVs byte for byte.
int run(const std::vector<std::string>& args);

}  // namespace ngrad::cli
