#pragma once

#include <iosfwd>

namespace dpdtest::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kComputation = 2 };

/// Entry point of the `dpdtest` tool; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpdtest::cli
