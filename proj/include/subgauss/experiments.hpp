#pragma once

#include "subgauss/gaussian_core.hpp"
#include "subgauss/report.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace subgauss {

// 4 + (2/pi)(kappa - 1); throws DomainError for kappa < 1.
double sigma_sq_bound(double kappa);

// Haar-distributed orthogonal matrix from the QR factorisation of a Gaussian
// matrix, with R's diagonal made positive.
Eigen::MatrixXd random_orthogonal(Index n, std::uint64_t seed);

// Q diag(lambda) Q^T with lambda log-uniformly spaced on [1, kappa] and Q
// random orthogonal. kappa == 1 returns the identity exactly.
CovarianceSpec make_conditioned_covariance(Index n, double kappa, std::uint64_t seed);

// First floor(n/2) rows and the remainder. Throws DimensionTooSmall for n < 2.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> partition_rows(const Eigen::MatrixXd& w);

struct TheoremConfig {
  std::vector<std::int64_t> dims{16, 64, 256};
  std::vector<double> kappas{1.0, 4.0, 16.0};
  std::vector<std::string> maps{"sgn", "clamp"};
  std::int64_t samples_per_cell = 100000;
  std::int64_t directions = 64;
  bool refine = false;
  std::vector<double> lambdas{-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
  std::uint64_t seed = 42;

  bool operator==(const TheoremConfig&) const = default;
};

struct CorollaryConfig {
  std::vector<std::int64_t> dims{32, 64, 128};
  std::int64_t w_draws = 50;
  std::int64_t samples_per_w = 100000;
  std::int64_t directions = 64;
  std::vector<double> lambdas{-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
  double kappa_threshold = 100.0;
  std::uint64_t seed = 42;

  bool operator==(const CorollaryConfig&) const = default;
};

struct WishartConfig {
  std::vector<std::int64_t> dims{64, 128, 256};
  std::int64_t trials = 1000;
  double kappa_threshold = 100.0;
  double max_exceedance_rate = 0.01;
  std::uint64_t seed = 42;

  bool operator==(const WishartConfig&) const = default;
};

struct CounterexampleConfig {
  std::vector<std::int64_t> dims{16, 64, 256};
  std::int64_t samples = 100000;
  std::int64_t directions = 64;
  std::uint64_t seed = 42;

  bool operator==(const CounterexampleConfig&) const = default;
};

inline constexpr double kFlatnessRatio = 1.3;
inline constexpr double kSymmetryExceedanceRate = 0.01;

// Throw ValidationError naming the offending field.
void validate(const TheoremConfig& cfg);
void validate(const CorollaryConfig& cfg);
void validate(const WishartConfig& cfg);
void validate(const CounterexampleConfig& cfg);

ExperimentReport run_theorem_experiment(const TheoremConfig& cfg);
ExperimentReport run_corollary_experiment(const CorollaryConfig& cfg);
ExperimentReport run_wishart_conditioning(const WishartConfig& cfg);
ExperimentReport run_counterexample(const CounterexampleConfig& cfg);

// Least-squares slope of log(values) against log(dims).
double log_log_slope(const std::vector<double>& dims, const std::vector<double>& values);

}  // namespace subgauss
