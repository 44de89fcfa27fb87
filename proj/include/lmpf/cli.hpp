#pragma once

#include <iosfwd>

namespace lmpf {

/// Entry point of the `lmpf` tool. Returns the process exit code:
/// 0 success, 1 usage or invalid input, 2 infeasible or empty, 3 numerical failure.
/// Documents go to the --out paths, or to `out` when no path is given;
/// diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lmpf
