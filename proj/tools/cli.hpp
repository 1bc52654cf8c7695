#pragma once

#include <iosfwd>

namespace goagentnet::cli {

/// Exit codes: 0 success, 1 config or usage error, 2 no feasible plan.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNoPlan = 2;

/// Entry point shared by the binary and the tests. Reports go to --out or `out`;
/// diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace goagentnet::cli
