#pragma once

#include <filesystem>
#include <iosfwd>

namespace riskbench {

/// Exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;

/// Bundled data directory: $RISKBENCH_DATA when set, else the source tree's
/// data/ directory.
std::filesystem::path data_dir();

/// Parses argv, runs the selected engine and writes its report. Reports
/// without --out go to `out`; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace riskbench
