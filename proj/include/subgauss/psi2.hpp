#pragma once

#include "subgauss/gaussian_core.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace subgauss {

enum class Psi2Estimator { orlicz, mgf_fit };

std::string_view to_string(Psi2Estimator estimator);

struct Psi2Estimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  Psi2Estimator estimator = Psi2Estimator::orlicz;
  Index n_samples = 0;
  Index n_directions = 0;            // vector case only
  Eigen::VectorXd argmax_direction;  // vector case only
};

inline constexpr Index kMinScalarSamples = 1000;
inline constexpr Index kMinVectorSamples = 10000;
inline constexpr double kZeroTolerance = 1e-12;

struct BootstrapOptions {
  int resamples = 200;
  std::uint64_t seed = 0x5eed;
  std::uint64_t stream = 0;
};

// Percentile of a sample (linear interpolation between order statistics).
double percentile(std::vector<double> values, double q);

// inf{t > 0 : mean exp(x^2 / t^2) <= 2} on the full sample. Returns 0 when
// every |x| <= 1e-12. The root is bracketed on t in [max|x| / sqrt(ln 2N),
// 10 max|x|] and located by safeguarded Newton steps on the log criterion,
// falling back to bisection whenever a step leaves the bracket.
double orlicz_norm(std::span<const double> samples);

// Orlicz estimate with a 200-resample percentile bootstrap. The reported
// value is the bootstrap median, i.e. the root of the median criterion.
// Throws InsufficientSamples below 1000 samples.
Psi2Estimate psi2_scalar(std::span<const double> samples, const BootstrapOptions& bootstrap = {});

struct MgfFit {
  double sigma = 0.0;        // fitted from the bootstrap upper band
  double sigma_point = 0.0;  // fitted from the point log-MGF
  std::vector<double> lambda_grid;
  std::vector<double> log_mgf;     // point estimate, per lambda
  std::vector<double> upper_band;  // bootstrap 97.5th percentile, per lambda
  std::vector<double> margins;     // log_mgf - sigma^2 lambda^2 / 2, per lambda
};

struct MgfOptions {
  BootstrapOptions bootstrap;
  bool center = true;
  double overflow_limit = 30.0;  // max |lambda| * max |x|
  // When positive, only this many columns (largest point sigma) get a
  // bootstrap band; the others report their point fit as the band.
  Index band_columns = 0;
};

std::vector<double> default_lambda_grid();  // {+-0.25, +-0.5, +-1, +-2}

// Smallest sigma with upper-band log E exp(lambda X) <= sigma^2 lambda^2 / 2
// on every grid point. When centering, each bootstrap resample is centred at
// its own mean. Throws GridTooWide when the overflow guard trips and
// InsufficientSamples for an empty sample.
MgfFit mgf_sigma(std::span<const double> samples, std::span<const double> lambda_grid,
                 const MgfOptions& options = {});

// mgf_sigma applied to every column of `projections`. All columns share the
// same bootstrap resamples.
std::vector<MgfFit> mgf_sigma_columns(const Eigen::MatrixXd& projections, std::span<const double> lambda_grid,
                                      const MgfOptions& options = {});

struct DirectionSearch {
  Index random_directions = 64;
  bool refine = false;
  bool center = true;
  Index principal_axes = 4;
  Eigen::MatrixXd extra_directions;  // n x k, columns need not be normalised
  int refine_sweeps = 50;
  double refine_step = 0.1;
  double refine_min_step = 1e-3;
  BootstrapOptions bootstrap;
};

struct VectorPsi2 {
  Psi2Estimate estimate;
  Eigen::MatrixXd directions;  // n x D unit columns, every direction scored
  Eigen::VectorXd scores;      // full-sample Orlicz value per direction
};

// Maximises the Orlicz norm of <v, Y> over: the n canonical vectors, 1/sqrt(n),
// `random_directions` seeded uniform unit vectors, the top principal axes of
// the empirical covariance, any extra directions, and (when refining) a
// coordinate-ascent polish of the best candidate. The value is the maximum
// full-sample score, so it never decreases as the direction set grows; the
// interval comes from bootstrapping the winning projection.
VectorPsi2 psi2_vector_search(const Eigen::MatrixXd& data, const DirectionSearch& search = {});

Psi2Estimate psi2_vector(const SampleBatch& batch, Index direction_budget, bool refine,
                         const BootstrapOptions& bootstrap = {});

// Upper bound on the norm of a concatenation of two blocks.
double triangle_combine(const Psi2Estimate& first, const Psi2Estimate& second);

}  // namespace subgauss
