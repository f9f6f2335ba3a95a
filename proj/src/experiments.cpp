#include "subgauss/experiments.hpp"

#include "subgauss/error.hpp"
#include "subgauss/nonlinearity.hpp"
#include "subgauss/parallel.hpp"
#include "subgauss/psi2.hpp"
#include "subgauss/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#ifndef SUBGAUSS_VERSION
#define SUBGAUSS_VERSION "dev"
#endif

namespace subgauss {
namespace {

// Top-level stream ids; every work unit derives its own substream from these.
constexpr std::uint64_t kTheoremStream = 1;
constexpr std::uint64_t kCorollaryStream = 2;
constexpr std::uint64_t kWishartStream = 3;
constexpr std::uint64_t kCounterexampleStream = 4;
constexpr Index kBandColumns = 16;

nlohmann::json base_metadata(std::string_view experiment, std::uint64_t seed) {
  return {{"experiment", experiment}, {"seed", seed}, {"version", SUBGAUSS_VERSION}};
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <class T>
void require(bool ok, std::string field, const T& value, std::string_view rule) {
  if (ok) return;
  std::ostringstream os;
  os << "value " << value << " violates " << rule;
  throw ValidationError(std::move(field), os.str());
}

void validate_dims(const std::vector<std::int64_t>& dims, std::int64_t minimum) {
  require(!dims.empty(), "dims", "[]", "nonempty list");
  for (std::size_t i = 0; i < dims.size(); ++i)
    require(dims[i] >= minimum, "dims[" + std::to_string(i) + "]", dims[i], "n >= " + std::to_string(minimum));
}

void validate_lambdas(const std::vector<double>& lambdas) {
  require(!lambdas.empty(), "lambdas", "[]", "nonempty list");
  for (std::size_t i = 0; i < lambdas.size(); ++i)
    require(std::isfinite(lambdas[i]) && lambdas[i] != 0.0, "lambdas[" + std::to_string(i) + "]", lambdas[i],
            "finite and nonzero");
}

double max_over(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }
double min_over(const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); }

double ratio_max_min(const std::vector<double>& v) {
  const double lo = min_over(v);
  return lo > 0.0 ? max_over(v) / lo : (max_over(v) > 0.0 ? INFINITY : 1.0);
}

Eigen::MatrixXd sign_of(const Eigen::MatrixXd& x) {
  return x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

Eigen::MatrixXd top_principal_axes(const Eigen::MatrixXd& centered, Index count) {
  const Index n = centered.cols();
  count = std::min(count, n);
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(centered.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  return solver.eigenvectors().rightCols(count).rowwise().reverse();
}

// Largest sigma^2 with log M(lambda) - slack <= sigma^2 lambda^2 / 2 still
// violated, where slack = upper band - point estimate.
double envelope_sigma_sq(const std::vector<MgfFit>& fits) {
  double out = 0.0;
  for (const auto& fit : fits)
    for (std::size_t l = 0; l < fit.lambda_grid.size(); ++l) {
      const double lambda = fit.lambda_grid[l];
      const double lower = 2.0 * fit.log_mgf[l] - fit.upper_band[l];
      out = std::max(out, 2.0 * lower / (lambda * lambda));
    }
  return out;
}

double max_sigma(const std::vector<MgfFit>& fits, bool point) {
  double out = 0.0;
  for (const auto& f : fits) out = std::max(out, point ? f.sigma_point : f.sigma);
  return out;
}

}  // namespace

double sigma_sq_bound(double kappa) {
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    std::ostringstream os;
    os << "condition number must be >= 1, got " << kappa;
    throw DomainError(os.str());
  }
  const double value = 4.0 + (2.0 / std::numbers::pi) * (kappa - 1.0);
  if (value > 4.0 * kappa) throw BoundViolation("sigma^2 bound exceeds 4 kappa");
  return value;
}

Eigen::MatrixXd random_orthogonal(Index n, std::uint64_t seed) {
  const Eigen::MatrixXd g = standard_normal_matrix(n, n, seed, 0);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

CovarianceSpec make_conditioned_covariance(Index n, double kappa, std::uint64_t seed) {
  if (n < 2) throw DimensionTooSmall("conditioned covariance needs n >= 2");
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) throw DomainError("condition number must be >= 1");
  if (kappa == 1.0) return CovarianceSpec::identity(n);
  const Eigen::MatrixXd q = random_orthogonal(n, seed);
  Eigen::VectorXd spectrum(n);
  for (Index i = 0; i < n; ++i) spectrum(i) = std::pow(kappa, static_cast<double>(i) / static_cast<double>(n - 1));
  spectrum(n - 1) = kappa;
  Eigen::MatrixXd sigma = q * spectrum.asDiagonal() * q.transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  return CovarianceSpec::from_matrix(sigma);
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> partition_rows(const Eigen::MatrixXd& w) {
  const Index n = w.rows();
  if (n < 2) throw DimensionTooSmall("row partition needs at least 2 rows");
  const Index m = n / 2;
  return {w.topRows(m), w.bottomRows(n - m)};
}

double log_log_slope(const std::vector<double>& dims, const std::vector<double>& values) {
  if (dims.size() != values.size() || dims.size() < 2) throw DomainError("slope fit needs >= 2 matched points");
  const auto k = static_cast<double>(dims.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    const double x = std::log(dims[i]);
    const double y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

void validate(const TheoremConfig& cfg) {
  validate_dims(cfg.dims, 2);
  require(!cfg.kappas.empty(), "kappas", "[]", "nonempty list");
  for (std::size_t i = 0; i < cfg.kappas.size(); ++i)
    require(std::isfinite(cfg.kappas[i]) && cfg.kappas[i] >= 1.0, "kappas[" + std::to_string(i) + "]",
            cfg.kappas[i], "kappa >= 1");
  require(!cfg.maps.empty(), "maps", "[]", "nonempty list");
  for (std::size_t i = 0; i < cfg.maps.size(); ++i) {
    try {
      make_map(cfg.maps[i]);
    } catch (const UnknownMap& e) {
      throw ValidationError("maps[" + std::to_string(i) + "]", e.what());
    } catch (const BoundViolation& e) {
      throw ValidationError("maps[" + std::to_string(i) + "]", e.what());
    }
  }
  require(cfg.samples_per_cell >= 2 * kMinVectorSamples, "samples", cfg.samples_per_cell, "samples >= 20000");
  require(cfg.directions >= 0, "directions", cfg.directions, "directions >= 0");
  validate_lambdas(cfg.lambdas);
}

void validate(const CorollaryConfig& cfg) {
  validate_dims(cfg.dims, 4);
  require(cfg.w_draws >= 20, "w_draws", cfg.w_draws, "w_draws >= 20");
  require(cfg.samples_per_w >= kMinVectorSamples, "samples", cfg.samples_per_w, "samples >= 10000");
  require(cfg.directions >= 0, "directions", cfg.directions, "directions >= 0");
  require(cfg.kappa_threshold >= 1.0, "kappa_threshold", cfg.kappa_threshold, "kappa_threshold >= 1");
  validate_lambdas(cfg.lambdas);
}

void validate(const WishartConfig& cfg) {
  validate_dims(cfg.dims, 2);
  require(cfg.trials >= 100, "trials", cfg.trials, "trials >= 100");
  require(cfg.kappa_threshold >= 1.0, "kappa_threshold", cfg.kappa_threshold, "kappa_threshold >= 1");
  require(cfg.max_exceedance_rate >= 0.0 && cfg.max_exceedance_rate <= 1.0, "max_exceedance_rate",
          cfg.max_exceedance_rate, "0 <= rate <= 1");
}

void validate(const CounterexampleConfig& cfg) {
  validate_dims(cfg.dims, 2);
  require(cfg.dims.size() >= 3, "dims", cfg.dims.size(), "at least 3 dimensions");
  const auto [lo, hi] = std::minmax_element(cfg.dims.begin(), cfg.dims.end());
  require(*hi >= 8 * *lo, "dims", *hi, "a span of at least a factor 8");
  require(cfg.samples >= kMinVectorSamples, "samples", cfg.samples, "samples >= 10000");
  require(cfg.directions >= 0, "directions", cfg.directions, "directions >= 0");
}

ExperimentReport run_theorem_experiment(const TheoremConfig& cfg) {
  validate(cfg);
  const Stopwatch clock;
  ExperimentReport report;
  report.experiment = "theorem";
  report.metadata = base_metadata("theorem", cfg.seed);
  report.metadata["centering"] = "mean of an independent first half; estimators run on the second half";

  std::vector<BoundedMap> maps;
  for (const auto& name : cfg.maps) maps.push_back(make_map(name));

  // orlicz[map][kappa][n], sigma[map][kappa][n]
  const std::size_t nm = maps.size(), nk = cfg.kappas.size(), nn = cfg.dims.size();
  std::vector<double> orlicz(nm * nk * nn), sigma(nm * nk * nn);
  auto at = [&](std::size_t m, std::size_t k, std::size_t i) { return (m * nk + k) * nn + i; };

  for (std::size_t i = 0; i < nn; ++i) {
    const Index n = cfg.dims[i];
    for (std::size_t k = 0; k < nk; ++k) {
      const double kappa = cfg.kappas[k];
      const std::uint64_t cell = substream(substream(kTheoremStream, i), k);
      const CovarianceSpec cov = make_conditioned_covariance(n, kappa, derive_seed(cfg.seed, cell, 0));
      const SampleBatch x = sample_gaussian(cov, cfg.samples_per_cell, cfg.seed, substream(cell, 1));
      const Index half = cfg.samples_per_cell / 2;

      for (std::size_t m = 0; m < nm; ++m) {
        const Eigen::MatrixXd y = maps[m].apply(x.data);
        const Eigen::RowVectorXd mean = y.topRows(half).colwise().mean();
        const Eigen::MatrixXd first = y.topRows(half).rowwise() - mean;
        const Eigen::MatrixXd second = y.bottomRows(y.rows() - half).rowwise() - mean;

        DirectionSearch search;
        search.random_directions = cfg.directions;
        search.refine = cfg.refine;
        search.center = false;
        search.principal_axes = 0;
        search.extra_directions = top_principal_axes(first, 4);
        search.bootstrap = BootstrapOptions{200, cfg.seed, substream(cell, 2 + m)};
        const VectorPsi2 found = psi2_vector_search(second, search);

        MgfOptions mgf;
        mgf.center = false;
        mgf.bootstrap = BootstrapOptions{200, cfg.seed, substream(cell, 100 + m)};
        const std::vector<MgfFit> fits = mgf_sigma_columns(second * found.directions, cfg.lambdas, mgf);

        const std::string tag = maps[m].name();
        const double s = max_sigma(fits, false);
        const Psi2Estimate& e = found.estimate;
        report.rows.push_back(make_row("theorem", n, kappa, tag + ":orlicz", e.value, e.ci_low, e.ci_high, {}));
        report.rows.push_back(
            make_row("theorem", n, kappa, tag + ":mgf_fit", s, max_sigma(fits, true), s, 2.0 * std::sqrt(kappa)));
        const double env = envelope_sigma_sq(fits);
        report.rows.push_back(make_row("theorem", n, kappa, tag + ":mgf_envelope", env, env, env, sigma_sq_bound(kappa)));
        orlicz[at(m, k, i)] = e.value;
        sigma[at(m, k, i)] = s;
      }
    }
  }

  for (std::size_t m = 0; m < nm; ++m)
    for (std::size_t k = 0; k < nk; ++k) {
      std::vector<double> o(orlicz.begin() + at(m, k, 0), orlicz.begin() + at(m, k, 0) + nn);
      std::vector<double> s(sigma.begin() + at(m, k, 0), sigma.begin() + at(m, k, 0) + nn);
      const std::string tag = maps[m].name();
      report.rows.push_back(make_row("theorem", {}, cfg.kappas[k], tag + ":orlicz_flatness", ratio_max_min(o),
                                     min_over(o), max_over(o), kFlatnessRatio));
      report.rows.push_back(make_row("theorem", {}, cfg.kappas[k], tag + ":mgf_fit_spread", ratio_max_min(s) - 1.0,
                                     min_over(s), max_over(s), 0.25));
    }
  report.metadata["runtime_seconds"] = clock.seconds();
  return report;
}

ExperimentReport run_corollary_experiment(const CorollaryConfig& cfg) {
  validate(cfg);
  const Stopwatch clock;
  ExperimentReport report;
  report.experiment = "corollary";
  report.metadata = base_metadata("corollary", cfg.seed);
  report.metadata["kappa_threshold_note"] =
      "kappa(Sigma_1) > kappa_threshold is a reporting proxy for the complement of the well-conditioned event; "
      "the threshold is a configuration choice";

  std::vector<double> combined_means;
  for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
    const Index n = cfg.dims[i];
    const Index m = n / 2;
    const std::uint64_t n_stream = substream(kCorollaryStream, i);
    std::vector<double> combined, direct, kappas1;
    Index asymmetric = 0, coordinates = 0, ill_conditioned = 0;

    for (std::int64_t w = 0; w < cfg.w_draws; ++w) {
      const std::uint64_t ws = substream(n_stream, static_cast<std::uint64_t>(w));
      const Eigen::MatrixXd wmat = standard_normal_matrix(n, n, cfg.seed, substream(ws, 0));
      const auto [w1, w2] = partition_rows(wmat);
      const double kappa1 = condition_number(CovarianceSpec::wishart_of(w1));
      const double kappa2 = condition_number(CovarianceSpec::wishart_of(w2));
      kappas1.push_back(kappa1);
      if (kappa1 > cfg.kappa_threshold) ++ill_conditioned;

      Eigen::MatrixXd y = sign_of(standard_normal_matrix(cfg.samples_per_w, n, cfg.seed, substream(ws, 1)) *
                                  wmat.transpose());

      // E[Y | W] = 0 by symmetry: every coordinate mean within 3 standard errors.
      const double count = static_cast<double>(y.rows());
      const Eigen::RowVectorXd mean = y.colwise().mean();
      const Eigen::RowVectorXd second_moment = y.array().square().colwise().mean().matrix();
      for (Index j = 0; j < n; ++j) {
        const double var = std::max(second_moment(j) - mean(j) * mean(j), 0.0);
        ++coordinates;
        if (std::abs(mean(j)) > 3.0 * std::sqrt(var / count)) ++asymmetric;
      }

      auto search_for = [&](std::uint64_t child) {
        DirectionSearch s;
        s.random_directions = cfg.directions;
        s.center = false;
        s.bootstrap = BootstrapOptions{200, cfg.seed, substream(ws, child)};
        return s;
      };
      const Eigen::MatrixXd y1 = y.leftCols(m);
      const Eigen::MatrixXd y2 = y.rightCols(n - m);
      const VectorPsi2 block1 = psi2_vector_search(y1, search_for(2));
      const VectorPsi2 block2 = psi2_vector_search(y2, search_for(3));
      const VectorPsi2 full = psi2_vector_search(y, search_for(4));

      MgfOptions mgf;
      mgf.bootstrap = BootstrapOptions{200, cfg.seed, substream(ws, 5)};
      mgf.band_columns = kBandColumns;
      const std::vector<MgfFit> fits = mgf_sigma_columns(y1 * block1.directions, cfg.lambdas, mgf);
      const double s1 = max_sigma(fits, false);
      mgf.bootstrap.stream = substream(ws, 6);
      const std::vector<MgfFit> fits2 = mgf_sigma_columns(y2 * block2.directions, cfg.lambdas, mgf);
      const double s2 = max_sigma(fits2, false);

      const double sum = triangle_combine(block1.estimate, block2.estimate);
      combined.push_back(sum);
      direct.push_back(full.estimate.value);

      const double trivial = std::sqrt(static_cast<double>(m) / std::numbers::ln2) * (1.0 + 1e-9);
      const auto& e1 = block1.estimate;
      report.rows.push_back(
          make_row("corollary", n, kappa1, "block1:mgf_fit", s1, max_sigma(fits, true), s1, 2.0 * std::sqrt(kappa1)));
      report.rows.push_back(make_row("corollary", n, kappa1, "block1:orlicz", e1.value, e1.ci_low, e1.ci_high, trivial));
      report.rows.push_back(make_row("corollary", n, kappa2, "block2:mgf_fit", s2, max_sigma(fits2, true), s2,
                                     2.0 * std::sqrt(kappa2)));
      const auto& e2 = block2.estimate;
      report.rows.push_back(make_row("corollary", n, {}, "block2:orlicz", e2.value, e2.ci_low, e2.ci_high, {}));
      const auto& ef = full.estimate;
      report.rows.push_back(make_row("corollary", n, {}, "triangle:direct_vs_combined", ef.value, ef.ci_low,
                                     ef.ci_high, sum + (ef.value - ef.ci_low)));
    }

    auto mean_of = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
    auto sem_of = [&](const std::vector<double>& v) {
      const double mu = mean_of(v);
      double ss = 0.0;
      for (double x : v) ss += (x - mu) * (x - mu);
      return std::sqrt(ss / (v.size() - 1) / v.size());
    };
    const double cm = mean_of(combined);
    combined_means.push_back(cm);
    report.rows.push_back(make_row("corollary", n, {}, "combined:mean_orlicz", cm, cm - 1.96 * sem_of(combined),
                                   cm + 1.96 * sem_of(combined), {}));
    const double dm = mean_of(direct);
    report.rows.push_back(make_row("corollary", n, {}, "direct:mean_orlicz", dm, dm - 1.96 * sem_of(direct),
                                   dm + 1.96 * sem_of(direct), {}));
    report.rows.push_back(make_row("corollary", n, {}, "kappa1:median", percentile(kappas1, 0.5),
                                   percentile(kappas1, 0.05), percentile(kappas1, 0.95), {}));
    report.rows.push_back(make_row("corollary", n, cfg.kappa_threshold, "kappa1:exceedance",
                                   static_cast<double>(ill_conditioned) / kappas1.size(), 0.0, 1.0, {}));
    const double rate = static_cast<double>(asymmetric) / static_cast<double>(coordinates);
    report.rows.push_back(make_row("corollary", n, {}, "symmetry:coords_beyond_3se", rate, 0.0, 1.0,
                                   kSymmetryExceedanceRate));
  }
  report.rows.push_back(make_row("corollary", {}, {}, "combined:orlicz_flatness", ratio_max_min(combined_means),
                                 min_over(combined_means), max_over(combined_means), kFlatnessRatio));
  report.metadata["runtime_seconds"] = clock.seconds();
  return report;
}

ExperimentReport run_wishart_conditioning(const WishartConfig& cfg) {
  validate(cfg);
  const Stopwatch clock;
  ExperimentReport report;
  report.experiment = "wishart";
  report.metadata = base_metadata("wishart", cfg.seed);
  report.metadata["kappa_threshold_note"] =
      "the exceedance threshold is a reporting proxy for the complement of the well-conditioned event";

  for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
    const Index n = cfg.dims[i];
    const Index m = n / 2;
    const std::uint64_t n_stream = substream(kWishartStream, i);
    std::vector<double> kappas(static_cast<std::size_t>(cfg.trials));
    parallel_for(kappas.size(), [&](std::size_t t) {
      const Eigen::MatrixXd w1 = standard_normal_matrix(m, n, cfg.seed, substream(n_stream, t));
      kappas[t] = condition_number(CovarianceSpec::wishart_of(w1));
    });
    const auto exceed = std::count_if(kappas.begin(), kappas.end(), [&](double k) { return k > cfg.kappa_threshold; });
    report.rows.push_back(make_row("wishart", n, {}, "kappa1:median", percentile(kappas, 0.5),
                                   percentile(kappas, 0.05), percentile(kappas, 0.95), {}));
    const double rate = static_cast<double>(exceed) / static_cast<double>(kappas.size());
    report.rows.push_back(
        make_row("wishart", n, cfg.kappa_threshold, "kappa1:exceedance", rate, 0.0, 1.0, cfg.max_exceedance_rate));
  }
  report.metadata["runtime_seconds"] = clock.seconds();
  return report;
}

ExperimentReport run_counterexample(const CounterexampleConfig& cfg) {
  validate(cfg);
  const Stopwatch clock;
  ExperimentReport report;
  report.experiment = "counterexample";
  report.metadata = base_metadata("counterexample", cfg.seed);

  std::vector<double> dims, values;
  for (std::size_t i = 0; i < cfg.dims.size(); ++i) {
    const Index n = cfg.dims[i];
    const std::uint64_t n_stream = substream(kCounterexampleStream, i);
    const SampleBatch x = sample_gaussian(CovarianceSpec::rank_one_ones(n), cfg.samples, cfg.seed, substream(n_stream, 0));
    DirectionSearch search;
    search.random_directions = cfg.directions;
    search.center = false;
    search.bootstrap = BootstrapOptions{200, cfg.seed, substream(n_stream, 1)};
    const Psi2Estimate e = psi2_vector_search(sign_of(x.data), search).estimate;
    const double exact = std::sqrt(static_cast<double>(n) / std::numbers::ln2);
    report.rows.push_back(make_row("counterexample", n, {}, "orlicz", e.value, e.ci_low, e.ci_high, {}));
    report.rows.push_back(make_row("counterexample", n, {}, "orlicz:rel_error_vs_sqrt_n_over_ln2",
                                   std::abs(e.value - exact) / exact, 0.0, 0.0, 0.05));
    dims.push_back(static_cast<double>(n));
    values.push_back(e.value);
  }
  const double slope = log_log_slope(dims, values);
  report.rows.push_back(make_row("counterexample", {}, {}, "orlicz:loglog_slope", slope, slope, slope, {}));
  report.rows.push_back(
      make_row("counterexample", {}, {}, "orlicz:slope_minus_half", std::abs(slope - 0.5), 0.0, 0.0, 0.05));
  report.metadata["runtime_seconds"] = clock.seconds();
  return report;
}

}  // namespace subgauss
