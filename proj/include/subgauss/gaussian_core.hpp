#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <utility>

namespace subgauss {

using Index = Eigen::Index;

enum class CovarianceKind { explicit_matrix, identity, scaled_identity, diagonal, rank_one_ones, wishart };

std::string_view to_string(CovarianceKind kind);

inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kPsdTolerance = 1e-10;
inline constexpr double kSingularityRatio = 1e-12;

struct CovarianceSplit;
class CovarianceSpec;
CovarianceSplit split_covariance(const CovarianceSpec& cov);

// Symmetric positive semidefinite covariance with a cached spectral
// decomposition. Immutable once built; eigenvalues are stored nonincreasing and
// eigenvector columns follow the same order. Eigenvalues in [-1e-10, 0) are
// clamped to zero, anything more negative is rejected.
class CovarianceSpec {
 public:
  static CovarianceSpec from_matrix(const Eigen::MatrixXd& matrix);
  static CovarianceSpec identity(Index n);
  static CovarianceSpec scaled_identity(Index n, double scale);
  static CovarianceSpec diagonal(const Eigen::VectorXd& entries);
  static CovarianceSpec rank_one_ones(Index n);
  // W W^T for an arbitrary real matrix W.
  static CovarianceSpec wishart_of(const Eigen::MatrixXd& w);

  Index dim() const noexcept { return matrix_.rows(); }
  CovarianceKind kind() const noexcept { return kind_; }
  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
  double lambda_max() const noexcept { return eigenvalues_(0); }
  double lambda_min() const noexcept { return eigenvalues_(eigenvalues_.size() - 1); }

  // Q Lambda^{1/2}, with eigenvalues below the numerical rank cutoff dropped
  // so that exactly singular inputs (e.g. 11^T) yield exactly degenerate draws.
  const Eigen::MatrixXd& sampling_factor() const noexcept { return factor_; }

 private:
  CovarianceSpec(Eigen::MatrixXd matrix, Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors,
                 CovarianceKind kind);
  static CovarianceSpec decompose(Eigen::MatrixXd matrix, CovarianceKind kind);

  friend CovarianceSplit split_covariance(const CovarianceSpec& cov);

  Eigen::MatrixXd matrix_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::MatrixXd factor_;
  CovarianceKind kind_;
};

// Sigma = a I + Sigma_G with a = lambda_min(Sigma), so X = sqrt(a) Z + G for
// independent Z ~ N(0, I) and G ~ N(0, Sigma_G).
struct CovarianceSplit {
  double a;
  CovarianceSpec residual;

  Eigen::MatrixXd reconstruct() const;
};

// lambda_max / lambda_min. Throws SingularCovariance when
// lambda_min <= relative_threshold * lambda_max.
double condition_number(const CovarianceSpec& cov, double relative_threshold = kSingularityRatio);

CovarianceSplit split_covariance(const CovarianceSpec& cov);

// Draws are generated in fixed chunks of kChunkRows rows; chunk c uses the
// engine derived from (seed, stream_id, c). Output is therefore identical for
// any worker count.
inline constexpr Index kChunkRows = 4096;

struct SampleBatch {
  Index dim = 0;
  Index count = 0;
  Eigen::MatrixXd data;  // count x dim, one draw per row
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

// count x dim matrix of i.i.d. N(0, 1) entries.
Eigen::MatrixXd standard_normal_matrix(Index count, Index dim, std::uint64_t seed, std::uint64_t stream_id);

// Rows [chunk * kChunkRows, chunk * kChunkRows + rows) of the batch that
// sample_gaussian would produce for the same arguments.
Eigen::MatrixXd sample_gaussian_chunk(const CovarianceSpec& cov, Index chunk, Index rows, std::uint64_t seed,
                                      std::uint64_t stream_id);

SampleBatch sample_gaussian(const CovarianceSpec& cov, Index count, std::uint64_t seed, std::uint64_t stream_id);

// Z and G from independent substreams of stream_id.
std::pair<SampleBatch, SampleBatch> sample_split_gaussian(const CovarianceSplit& split, Index count,
                                                          std::uint64_t seed, std::uint64_t stream_id);

// sqrt(a) Z + G.
Eigen::MatrixXd combine_split(const CovarianceSplit& split, const SampleBatch& z, const SampleBatch& g);

}  // namespace subgauss
