#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace subgauss {

enum ExitCode : int { kExitPass = 0, kExitBoundViolated = 1, kExitOperational = 2, kExitUsage = 64 };

struct SelftestCheck {
  std::string name;
  double value;      // observed discrepancy
  double tolerance;  // pass iff value <= tolerance
  bool pass;
};

// Closed-form oracle suite: Gaussian-smoothed sgn against erf, Orlicz
// estimates of Gaussian and Rademacher samples, covariance splitting.
std::vector<SelftestCheck> run_selftest(std::uint64_t seed = 42);

// Entry point behind the `subgauss` binary. args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace subgauss
