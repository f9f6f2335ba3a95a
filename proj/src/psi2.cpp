#include "subgauss/psi2.hpp"

#include "subgauss/error.hpp"
#include "subgauss/parallel.hpp"
#include "subgauss/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

namespace subgauss {

std::string_view to_string(Psi2Estimator estimator) {
  return estimator == Psi2Estimator::orlicz ? "orlicz" : "mgf_fit";
}

namespace {

using ConstArray = Eigen::Map<const Eigen::ArrayXd>;
using ByteMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr Index kScoreBlock = 32;
constexpr Index kMgfDirectionBlock = 16;
constexpr Index kMgfResampleBlock = 16;

// Root in s = 1/t^2 of h(s) = log mean exp(s u) - log 2, u = x^2. h is convex
// and increasing, so Newton from the right bracket end descends monotonically.
double orlicz_from_squares(const Eigen::Ref<const Eigen::ArrayXd>& u) {
  const double umax = u.maxCoeff();
  if (umax <= kZeroTolerance * kZeroTolerance) return 0.0;
  const double n = static_cast<double>(u.size());
  double lo = 0.01 / umax;
  double hi = std::log(2.0 * n) / umax;
  double s = hi;
  Eigen::ArrayXd w(u.size());
  for (int iter = 0; iter < 200; ++iter) {
    w = ((u - umax) * s).exp();
    const double s0 = w.sum();
    const double s1 = (u * w).sum();
    const double h = s * umax + std::log(s0 / n) - std::numbers::ln2;
    if (h == 0.0) break;
    (h > 0.0 ? hi : lo) = s;
    double next = s - h / (s1 / s0);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - s) <= 1e-14 * s;
    s = next;
    if (done || hi - lo <= 1e-15 * hi) break;
  }
  return 1.0 / std::sqrt(s);
}

std::vector<double> bootstrap_orlicz(std::span<const double> samples, const BootstrapOptions& bootstrap) {
  const Eigen::ArrayXd u = ConstArray(samples.data(), static_cast<Index>(samples.size())).square();
  const Index n = u.size();
  std::vector<double> roots(static_cast<std::size_t>(bootstrap.resamples));
  parallel_for(roots.size(), [&](std::size_t b) {
    Engine engine = make_engine(bootstrap.seed, bootstrap.stream, b);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    Eigen::ArrayXd resampled(n);
    for (Index i = 0; i < n; ++i) resampled(i) = u(pick(engine));
    roots[b] = orlicz_from_squares(resampled);
  });
  return roots;
}

bool all_zero(std::span<const double> samples) {
  return std::all_of(samples.begin(), samples.end(), [](double x) { return std::abs(x) <= kZeroTolerance; });
}

void require_samples(Index have, Index need, std::string_view what) {
  if (have < need) {
    std::ostringstream os;
    os << what << " needs at least " << need << " samples, got " << have;
    throw InsufficientSamples(os.str());
  }
}

double fit_sigma(std::span<const double> grid, const std::vector<double>& log_mgf) {
  double sigma_sq = 0.0;
  for (std::size_t l = 0; l < grid.size(); ++l) sigma_sq = std::max(sigma_sq, 2.0 * log_mgf[l] / (grid[l] * grid[l]));
  return std::sqrt(sigma_sq);
}

// One row per resample, multinomial counts over the n observations.
ByteMatrix resample_counts(Index n, const BootstrapOptions& bootstrap) {
  ByteMatrix counts = ByteMatrix::Zero(bootstrap.resamples, n);
  parallel_for(static_cast<std::size_t>(bootstrap.resamples), [&](std::size_t b) {
    Engine engine = make_engine(bootstrap.seed, bootstrap.stream, b);
    std::uniform_int_distribution<Index> pick(0, n - 1);
    auto row = counts.row(static_cast<Index>(b));
    for (Index i = 0; i < n; ++i) {
      std::uint8_t& c = row(pick(engine));
      if (c == std::numeric_limits<std::uint8_t>::max()) throw DomainError("bootstrap count overflow");
      ++c;
    }
  });
  return counts;
}

}  // namespace

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double orlicz_norm(std::span<const double> samples) {
  if (samples.empty()) throw InsufficientSamples("Orlicz norm of an empty sample");
  return orlicz_from_squares(ConstArray(samples.data(), static_cast<Index>(samples.size())).square());
}

Psi2Estimate psi2_scalar(std::span<const double> samples, const BootstrapOptions& bootstrap) {
  const auto n = static_cast<Index>(samples.size());
  require_samples(n, kMinScalarSamples, "psi2_scalar");
  Psi2Estimate est;
  est.estimator = Psi2Estimator::orlicz;
  est.n_samples = n;
  if (all_zero(samples)) return est;
  const std::vector<double> roots = bootstrap_orlicz(samples, bootstrap);
  est.value = percentile(roots, 0.5);
  est.ci_low = percentile(roots, 0.025);
  est.ci_high = percentile(roots, 0.975);
  return est;
}

std::vector<double> default_lambda_grid() { return {-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0}; }

std::vector<MgfFit> mgf_sigma_columns(const Eigen::MatrixXd& projections, std::span<const double> lambda_grid,
                                      const MgfOptions& options) {
  const Index n = projections.rows();
  const Index dirs = projections.cols();
  const auto levels = static_cast<Index>(lambda_grid.size());
  if (n < 1) throw InsufficientSamples("mgf_sigma needs at least one sample");
  if (levels == 0) throw DomainError("empty lambda grid");
  for (double l : lambda_grid)
    if (l == 0.0 || !std::isfinite(l)) throw DomainError("lambda grid points must be finite and nonzero");

  Eigen::MatrixXd x = projections;
  if (options.center) x.rowwise() -= x.colwise().mean();

  const double max_lambda = std::abs(*std::max_element(lambda_grid.begin(), lambda_grid.end(),
                                                       [](double l, double r) { return std::abs(l) < std::abs(r); }));
  const double max_abs = dirs > 0 ? x.cwiseAbs().maxCoeff() : 0.0;
  if (max_lambda * max_abs > options.overflow_limit) {
    std::ostringstream os;
    os << "lambda grid too wide: max|lambda| * max|x| = " << max_lambda * max_abs << " > " << options.overflow_limit;
    throw GridTooWide(os.str());
  }

  std::vector<MgfFit> fits(static_cast<std::size_t>(dirs));
  std::vector<Index> banded(static_cast<std::size_t>(dirs));
  std::iota(banded.begin(), banded.end(), Index{0});
  if (options.band_columns > 0 && options.band_columns < dirs) {
    parallel_for(static_cast<std::size_t>(dirs), [&](std::size_t d) {
      MgfFit& fit = fits[d];
      fit.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
      for (double lambda : lambda_grid)
        fit.log_mgf.push_back(std::log((x.col(static_cast<Index>(d)).array() * lambda).exp().mean()));
      fit.upper_band = fit.log_mgf;
      fit.sigma_point = fit.sigma = fit_sigma(lambda_grid, fit.log_mgf);
      for (std::size_t l = 0; l < lambda_grid.size(); ++l)
        fit.margins.push_back(fit.log_mgf[l] - 0.5 * fit.sigma * fit.sigma * lambda_grid[l] * lambda_grid[l]);
    });
    std::stable_sort(banded.begin(), banded.end(), [&](Index l, Index r) {
      return fits[static_cast<std::size_t>(l)].sigma_point > fits[static_cast<std::size_t>(r)].sigma_point;
    });
    banded.resize(static_cast<std::size_t>(options.band_columns));
    std::sort(banded.begin(), banded.end());
  }
  const auto band_count = static_cast<Index>(banded.size());

  const ByteMatrix counts = resample_counts(n, options.bootstrap);
  const Index resamples = counts.rows();
  const Index stride = levels + 1;  // exp(lambda_l x) columns, then x itself
  const double inv_n = 1.0 / static_cast<double>(n);

  const Index blocks = (band_count + kMgfDirectionBlock - 1) / kMgfDirectionBlock;
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t blk) {
    const Index first = static_cast<Index>(blk) * kMgfDirectionBlock;
    const Index width = std::min(kMgfDirectionBlock, band_count - first);
    auto column_of = [&](Index d) { return banded[static_cast<std::size_t>(first + d)]; };
    Eigen::MatrixXd e(n, width * stride);
    for (Index d = 0; d < width; ++d) {
      for (Index l = 0; l < levels; ++l)
        e.col(d * stride + l) = (x.col(column_of(d)).array() * lambda_grid[static_cast<std::size_t>(l)]).exp().matrix();
      e.col(d * stride + levels) = x.col(column_of(d));
    }

    // boot[(d * levels + l) * resamples + b]
    std::vector<double> boot(static_cast<std::size_t>(width * levels * resamples));
    Eigen::MatrixXd weights;
    for (Index r0 = 0; r0 < resamples; r0 += kMgfResampleBlock) {
      const Index rows = std::min(kMgfResampleBlock, resamples - r0);
      weights = counts.middleRows(r0, rows).cast<double>();
      const Eigen::MatrixXd sums = weights * e;
      for (Index b = 0; b < rows; ++b)
        for (Index d = 0; d < width; ++d) {
          const double shift = options.center ? sums(b, d * stride + levels) * inv_n : 0.0;
          for (Index l = 0; l < levels; ++l) {
            const double lambda = lambda_grid[static_cast<std::size_t>(l)];
            boot[static_cast<std::size_t>((d * levels + l) * resamples + r0 + b)] =
                std::log(sums(b, d * stride + l) * inv_n) - lambda * shift;
          }
        }
    }

    for (Index d = 0; d < width; ++d) {
      MgfFit& fit = fits[static_cast<std::size_t>(column_of(d))];
      fit = MgfFit{};
      fit.lambda_grid.assign(lambda_grid.begin(), lambda_grid.end());
      for (Index l = 0; l < levels; ++l) {
        fit.log_mgf.push_back(std::log(e.col(d * stride + l).mean()));
        const auto begin = boot.begin() + (d * levels + l) * resamples;
        fit.upper_band.push_back(percentile(std::vector<double>(begin, begin + resamples), 0.975));
      }
      fit.sigma = fit_sigma(lambda_grid, fit.upper_band);
      fit.sigma_point = fit_sigma(lambda_grid, fit.log_mgf);
      const double s2 = fit.sigma * fit.sigma;
      for (Index l = 0; l < levels; ++l) {
        const double lambda = lambda_grid[static_cast<std::size_t>(l)];
        fit.margins.push_back(fit.log_mgf[static_cast<std::size_t>(l)] - 0.5 * s2 * lambda * lambda);
      }
    }
  });
  return fits;
}

MgfFit mgf_sigma(std::span<const double> samples, std::span<const double> lambda_grid, const MgfOptions& options) {
  const Eigen::Map<const Eigen::VectorXd> column(samples.data(), static_cast<Index>(samples.size()));
  return mgf_sigma_columns(Eigen::MatrixXd(column), lambda_grid, options).front();
}

namespace {

Eigen::VectorXd random_unit_vector(Index n, const BootstrapOptions& seeds, std::uint64_t index) {
  Engine engine = make_engine(seeds.seed, substream(seeds.stream, 1), index);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(engine);
  return v.normalized();
}

Eigen::MatrixXd candidate_directions(const Eigen::MatrixXd& centered, const DirectionSearch& search) {
  const Index n = centered.cols();
  std::vector<Eigen::VectorXd> extra;
  extra.push_back(Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n))));
  for (Index k = 0; k < search.random_directions; ++k)
    extra.push_back(random_unit_vector(n, search.bootstrap, static_cast<std::uint64_t>(k)));

  const Index axes = std::min(search.principal_axes, n);
  if (axes > 0) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(centered.rows());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    for (Index k = 0; k < axes; ++k) {
      Eigen::VectorXd v = solver.eigenvectors().col(n - 1 - k);
      // Fix the sign so the choice does not depend on solver internals.
      Index pivot = 0;
      v.cwiseAbs().maxCoeff(&pivot);
      if (v(pivot) < 0.0) v = -v;
      extra.push_back(v);
    }
  }
  for (Index k = 0; k < search.extra_directions.cols(); ++k) {
    const double norm = search.extra_directions.col(k).norm();
    if (norm > 0.0) extra.push_back(search.extra_directions.col(k) / norm);
  }

  Eigen::MatrixXd dirs(n, n + static_cast<Index>(extra.size()));
  dirs.leftCols(n).setIdentity();
  for (std::size_t k = 0; k < extra.size(); ++k) dirs.col(n + static_cast<Index>(k)) = extra[k];
  return dirs;
}

Eigen::VectorXd score_directions(const Eigen::MatrixXd& centered, const Eigen::MatrixXd& dirs) {
  Eigen::VectorXd scores(dirs.cols());
  const Index blocks = (dirs.cols() + kScoreBlock - 1) / kScoreBlock;
  parallel_for(static_cast<std::size_t>(blocks), [&](std::size_t blk) {
    const Index first = static_cast<Index>(blk) * kScoreBlock;
    const Index width = std::min(kScoreBlock, dirs.cols() - first);
    const Eigen::MatrixXd proj = centered * dirs.middleCols(first, width);
    for (Index d = 0; d < width; ++d) scores(first + d) = orlicz_from_squares(proj.col(d).array().square());
  });
  return scores;
}

struct Polished {
  Eigen::VectorXd direction;
  double score;
};

// Coordinate ascent on the sphere: try v +- step e_i for every i, keep any
// improvement, halve the step after a sweep without one.
Polished polish(const Eigen::MatrixXd& centered, Eigen::VectorXd v, double score, const DirectionSearch& search) {
  Eigen::VectorXd proj = centered * v;
  double step = search.refine_step;
  Eigen::ArrayXd trial(proj.size());
  for (int sweep = 0; sweep < search.refine_sweeps && step >= search.refine_min_step; ++sweep) {
    bool improved = false;
    for (Index i = 0; i < v.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        const double delta = sign * step;
        const double norm = std::sqrt(1.0 + 2.0 * delta * v(i) + delta * delta);
        trial = (proj.array() + delta * centered.col(i).array()) / norm;
        const double s = orlicz_from_squares(trial.square());
        if (s > score) {
          score = s;
          v(i) += delta;
          v /= norm;
          proj = trial.matrix();
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {v, score};
}

}  // namespace

VectorPsi2 psi2_vector_search(const Eigen::MatrixXd& data, const DirectionSearch& search) {
  require_samples(data.rows(), kMinVectorSamples, "psi2_vector");
  const Index n = data.cols();
  if (n < 1) throw DomainError("psi2_vector needs at least one coordinate");
  if (search.extra_directions.size() > 0 && search.extra_directions.rows() != n)
    throw DomainError("extra directions have the wrong dimension");

  Eigen::MatrixXd centered = data;
  if (search.center) centered.rowwise() -= centered.colwise().mean();

  VectorPsi2 out;
  out.directions = candidate_directions(centered, search);
  out.scores = score_directions(centered, out.directions);

  Index best = 0;
  out.scores.maxCoeff(&best);
  if (search.refine && out.scores(best) > 0.0) {
    const Polished p = polish(centered, out.directions.col(best), out.scores(best), search);
    if (p.score > out.scores(best)) {
      out.directions.conservativeResize(Eigen::NoChange, out.directions.cols() + 1);
      out.directions.col(out.directions.cols() - 1) = p.direction;
      out.scores.conservativeResize(out.scores.size() + 1);
      out.scores(out.scores.size() - 1) = p.score;
      best = out.scores.size() - 1;
    }
  }

  Psi2Estimate& est = out.estimate;
  est.estimator = Psi2Estimator::orlicz;
  est.n_samples = data.rows();
  est.n_directions = out.directions.cols();
  est.argmax_direction = out.directions.col(best);
  est.value = out.scores(best);
  if (est.value > 0.0) {
    const Eigen::VectorXd proj = centered * est.argmax_direction;
    const std::vector<double> roots = bootstrap_orlicz({proj.data(), static_cast<std::size_t>(proj.size())},
                                                       BootstrapOptions{search.bootstrap.resamples,
                                                                        search.bootstrap.seed,
                                                                        substream(search.bootstrap.stream, 2)});
    est.ci_low = std::min(percentile(roots, 0.025), est.value);
    est.ci_high = std::max(percentile(roots, 0.975), est.value);
  }
  return out;
}

Psi2Estimate psi2_vector(const SampleBatch& batch, Index direction_budget, bool refine,
                         const BootstrapOptions& bootstrap) {
  DirectionSearch search;
  search.random_directions = direction_budget;
  search.refine = refine;
  search.bootstrap = bootstrap;
  return psi2_vector_search(batch.data, search).estimate;
}

double triangle_combine(const Psi2Estimate& first, const Psi2Estimate& second) { return first.value + second.value; }

}  // namespace subgauss
