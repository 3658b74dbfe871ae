#pragma once

#include <ostream>

namespace qipf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Entry point of the `qipf` tool. Normal output goes to `out`; diagnostics,
/// or JSON error objects under --json, go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qipf::cli
