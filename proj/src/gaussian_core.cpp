#include "subgauss/gaussian_core.hpp"

#include "subgauss/error.hpp"
#include "subgauss/parallel.hpp"
#include "subgauss/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace subgauss {

std::string_view to_string(CovarianceKind kind) {
  switch (kind) {
    case CovarianceKind::explicit_matrix: return "explicit";
    case CovarianceKind::identity: return "identity";
    case CovarianceKind::scaled_identity: return "scaled-identity";
    case CovarianceKind::diagonal: return "diagonal";
    case CovarianceKind::rank_one_ones: return "rank-one-ones";
    case CovarianceKind::wishart: return "wishart-of";
  }
  return "unknown";
}

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_square(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << "covariance must be a nonempty square matrix, got " << m.rows() << "x" << m.cols();
    throw DomainError(os.str());
  }
  if (!m.allFinite()) throw DomainError("covariance has non-finite entries");
}

Eigen::MatrixXd spectral_factor(const Eigen::VectorXd& eigenvalues, const Eigen::MatrixXd& eigenvectors) {
  const double n = static_cast<double>(eigenvalues.size());
  const double cutoff =
      std::max(eigenvalues(0), 0.0) * n * 8.0 * std::numeric_limits<double>::epsilon();
  Eigen::VectorXd root(eigenvalues.size());
  for (Index i = 0; i < eigenvalues.size(); ++i) root(i) = eigenvalues(i) > cutoff ? std::sqrt(eigenvalues(i)) : 0.0;
  return eigenvectors * root.asDiagonal();
}

}  // namespace

CovarianceSpec::CovarianceSpec(Eigen::MatrixXd matrix, Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors,
                               CovarianceKind kind)
    : matrix_(std::move(matrix)),
      eigenvalues_(std::move(eigenvalues)),
      eigenvectors_(std::move(eigenvectors)),
      kind_(kind) {
  const double smallest = eigenvalues_(eigenvalues_.size() - 1);
  if (smallest < -kPsdTolerance) {
    std::ostringstream os;
    os << "covariance has eigenvalue " << smallest << " below -" << kPsdTolerance;
    throw NotPositiveSemidefinite(os.str());
  }
  eigenvalues_ = eigenvalues_.cwiseMax(0.0);
  factor_ = spectral_factor(eigenvalues_, eigenvectors_);
}

CovarianceSpec CovarianceSpec::decompose(Eigen::MatrixXd matrix, CovarianceKind kind) {
  check_square(matrix);
  const double asymmetry = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
  if (asymmetry > kSymmetryTolerance) {
    std::ostringstream os;
    os << "covariance is not symmetric (max asymmetry " << asymmetry << ")";
    throw NotSymmetric(os.str());
  }
  matrix = 0.5 * (matrix + matrix.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(matrix);
  if (solver.info() != Eigen::Success) throw DomainError("eigendecomposition failed");
  // Eigen returns ascending order; store nonincreasing.
  Eigen::VectorXd values = solver.eigenvalues().reverse();
  Eigen::MatrixXd vectors = solver.eigenvectors().rowwise().reverse();
  return CovarianceSpec(std::move(matrix), std::move(values), std::move(vectors), kind);
}

CovarianceSpec CovarianceSpec::from_matrix(const Eigen::MatrixXd& matrix) {
  return decompose(matrix, CovarianceKind::explicit_matrix);
}

CovarianceSpec CovarianceSpec::identity(Index n) {
  if (n < 1) throw DomainError("dimension must be positive");
  return CovarianceSpec(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Ones(n), Eigen::MatrixXd::Identity(n, n),
                        CovarianceKind::identity);
}

CovarianceSpec CovarianceSpec::scaled_identity(Index n, double scale) {
  if (n < 1) throw DomainError("dimension must be positive");
  if (!(scale >= 0.0)) throw NotPositiveSemidefinite("scaled identity needs a nonnegative scale");
  return CovarianceSpec(scale * Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Constant(n, scale),
                        Eigen::MatrixXd::Identity(n, n), CovarianceKind::scaled_identity);
}

CovarianceSpec CovarianceSpec::diagonal(const Eigen::VectorXd& entries) {
  const Index n = entries.size();
  if (n < 1) throw DomainError("dimension must be positive");
  if (!entries.allFinite()) throw DomainError("diagonal has non-finite entries");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index l, Index r) { return entries(l) > entries(r); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors = Eigen::MatrixXd::Zero(n, n);
  for (Index k = 0; k < n; ++k) {
    values(k) = entries(order[static_cast<std::size_t>(k)]);
    vectors(order[static_cast<std::size_t>(k)], k) = 1.0;
  }
  return CovarianceSpec(entries.asDiagonal(), std::move(values), std::move(vectors), CovarianceKind::diagonal);
}

CovarianceSpec CovarianceSpec::rank_one_ones(Index n) {
  if (n < 1) throw DomainError("dimension must be positive");
  return decompose(Eigen::MatrixXd::Ones(n, n), CovarianceKind::rank_one_ones);
}

CovarianceSpec CovarianceSpec::wishart_of(const Eigen::MatrixXd& w) {
  if (w.rows() == 0 || w.cols() == 0) throw DomainError("Wishart factor must be nonempty");
  Eigen::MatrixXd s = w * w.transpose();
  s = 0.5 * (s + s.transpose()).eval();
  return decompose(std::move(s), CovarianceKind::wishart);
}

Eigen::MatrixXd CovarianceSplit::reconstruct() const {
  Eigen::MatrixXd out = residual.matrix();
  out.diagonal().array() += a;
  return out;
}

double condition_number(const CovarianceSpec& cov, double relative_threshold) {
  const double top = cov.lambda_max();
  const double bottom = cov.lambda_min();
  if (!(top > 0.0) || bottom <= relative_threshold * top) {
    std::ostringstream os;
    os << "covariance is singular: lambda_min = " << bottom << ", lambda_max = " << top;
    throw SingularCovariance(os.str());
  }
  return top / bottom;
}

CovarianceSplit split_covariance(const CovarianceSpec& cov) {
  condition_number(cov);  // rejects singular input
  const double a = cov.lambda_min();
  Eigen::MatrixXd residual = cov.matrix();
  residual.diagonal().array() -= a;
  Eigen::VectorXd values = (cov.eigenvalues().array() - a).matrix();
  values(values.size() - 1) = 0.0;
  return CovarianceSplit{a, CovarianceSpec(std::move(residual), std::move(values), cov.eigenvectors(),
                                           CovarianceKind::explicit_matrix)};
}

namespace {

RowMajorMatrix normal_chunk(Index chunk, Index rows, Index dim, std::uint64_t seed, std::uint64_t stream_id) {
  Engine engine = make_engine(seed, stream_id, static_cast<std::uint64_t>(chunk));
  std::normal_distribution<double> normal;
  RowMajorMatrix z(rows, dim);
  double* p = z.data();
  for (Index k = 0; k < rows * dim; ++k) p[k] = normal(engine);
  return z;
}

Index chunk_count(Index count) { return (count + kChunkRows - 1) / kChunkRows; }

Index chunk_rows(Index chunk, Index count) { return std::min(kChunkRows, count - chunk * kChunkRows); }

}  // namespace

Eigen::MatrixXd standard_normal_matrix(Index count, Index dim, std::uint64_t seed, std::uint64_t stream_id) {
  if (count < 1 || dim < 1) throw DomainError("sample count and dimension must be positive");
  Eigen::MatrixXd out(count, dim);
  parallel_for(static_cast<std::size_t>(chunk_count(count)), [&](std::size_t c) {
    const Index chunk = static_cast<Index>(c);
    const Index rows = chunk_rows(chunk, count);
    out.middleRows(chunk * kChunkRows, rows) = normal_chunk(chunk, rows, dim, seed, stream_id);
  });
  return out;
}

Eigen::MatrixXd sample_gaussian_chunk(const CovarianceSpec& cov, Index chunk, Index rows, std::uint64_t seed,
                                      std::uint64_t stream_id) {
  const RowMajorMatrix z = normal_chunk(chunk, rows, cov.dim(), seed, stream_id);
  if (cov.kind() == CovarianceKind::identity) return z;
  return z * cov.sampling_factor().transpose();
}

SampleBatch sample_gaussian(const CovarianceSpec& cov, Index count, std::uint64_t seed, std::uint64_t stream_id) {
  if (count < 1) throw DomainError("sample count must be positive");
  SampleBatch batch;
  batch.dim = cov.dim();
  batch.count = count;
  batch.seed = seed;
  batch.stream_id = stream_id;
  batch.data.resize(count, cov.dim());
  parallel_for(static_cast<std::size_t>(chunk_count(count)), [&](std::size_t c) {
    const Index chunk = static_cast<Index>(c);
    const Index rows = chunk_rows(chunk, count);
    batch.data.middleRows(chunk * kChunkRows, rows) = sample_gaussian_chunk(cov, chunk, rows, seed, stream_id);
  });
  return batch;
}

std::pair<SampleBatch, SampleBatch> sample_split_gaussian(const CovarianceSplit& split, Index count,
                                                          std::uint64_t seed, std::uint64_t stream_id) {
  const Index n = split.residual.dim();
  SampleBatch z = sample_gaussian(CovarianceSpec::identity(n), count, seed, substream(stream_id, 0));
  SampleBatch g = sample_gaussian(split.residual, count, seed, substream(stream_id, 1));
  return {std::move(z), std::move(g)};
}

Eigen::MatrixXd combine_split(const CovarianceSplit& split, const SampleBatch& z, const SampleBatch& g) {
  return std::sqrt(split.a) * z.data + g.data;
}

}  // namespace subgauss
