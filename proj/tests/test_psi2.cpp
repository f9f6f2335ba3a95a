#include <doctest.h>

#include "subgauss/error.hpp"
#include "subgauss/gaussian_core.hpp"
#include "subgauss/psi2.hpp"
#include "subgauss/random.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace subgauss;

namespace {

std::vector<double> normal_draws(Index count, std::uint64_t seed) {
  const Eigen::MatrixXd z = standard_normal_matrix(count, 1, seed, 0);
  return {z.data(), z.data() + count};
}

Eigen::MatrixXd rademacher(Index count, Index dim, std::uint64_t seed) {
  Engine engine = make_engine(seed, 0, 0);
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd out(count, dim);
  for (Index i = 0; i < out.size(); ++i) out.data()[i] = coin(engine) ? 1.0 : -1.0;
  return out;
}

std::vector<double> as_vector(const Eigen::MatrixXd& m) { return {m.data(), m.data() + m.size()}; }

// Exact Orlicz norms: E exp(X^2/t^2) = 2.
// Standard normal: (1 - 2/t^2)^(-1/2) = 2.
const double kGaussianPsi2 = std::sqrt(2.0 / (1.0 - 0.25));
// Rademacher: exp(1/t^2) = 2.
const double kRademacherPsi2 = 1.0 / std::sqrt(std::numbers::ln2);

}  // namespace

TEST_CASE("Orlicz norm of reference laws") {
  const auto z = normal_draws(1000000, 3);
  const auto g = psi2_scalar(z);
  CHECK(std::abs(g.value - kGaussianPsi2) <= 0.03);
  CHECK(g.ci_low <= g.value);
  CHECK(g.value <= g.ci_high);
  CHECK(g.n_samples == 1000000);

  const auto r = psi2_scalar(as_vector(rademacher(1000000, 1, 4)));
  CHECK(std::abs(r.value - kRademacherPsi2) <= 0.02);
  // Every resample of +-1 has the same squares, so the interval collapses.
  CHECK(r.ci_high - r.ci_low <= 1e-9);

  // A single atom at c: exp(c^2/t^2) = 2 on the full sample.
  CHECK(orlicz_norm(std::vector<double>(10, 3.0)) == doctest::Approx(3.0 * kRademacherPsi2).epsilon(1e-12));
}

TEST_CASE("Orlicz edge cases") {
  const auto zero = psi2_scalar(std::vector<double>(5000, 0.0));
  CHECK(zero.value == 0.0);
  CHECK(zero.ci_low == 0.0);
  CHECK(zero.ci_high == 0.0);
  CHECK(orlicz_norm(std::vector<double>(3, 1e-13)) == 0.0);
  CHECK_THROWS_AS(psi2_scalar(std::vector<double>(999, 1.0)), InsufficientSamples);
  CHECK_THROWS_AS(orlicz_norm(std::vector<double>{}), InsufficientSamples);
}

TEST_CASE("Orlicz estimate is scale equivariant") {
  const auto z = normal_draws(20000, 9);
  const BootstrapOptions boot{200, 17, 3};
  const double base = psi2_scalar(z, boot).value;
  for (double c : {1e-3, 0.1, 2.5, 1e3}) {
    std::vector<double> scaled(z);
    for (double& v : scaled) v *= c;
    const double value = psi2_scalar(scaled, boot).value;
    CHECK(std::abs(value - c * base) <= 1e-6 * c * base);
  }
}

TEST_CASE("Orlicz norm stays within the sample's range") {
  // For any sample: max|x| / sqrt(ln 2N) <= t <= max|x| / sqrt(ln 2).
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto z = normal_draws(2000 + 100 * static_cast<Index>(seed), seed);
    double m = 0.0;
    for (double v : z) m = std::max(m, std::abs(v));
    const double t = orlicz_norm(z);
    CHECK(t >= m / std::sqrt(std::log(2.0 * z.size())) * (1.0 - 1e-12));
    CHECK(t <= m / std::sqrt(std::numbers::ln2) * (1.0 + 1e-12));
    double crit = 0.0;
    for (double v : z) crit += std::exp(v * v / (t * t));
    CHECK(crit / z.size() == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("MGF fit on reference laws") {
  const auto grid = default_lambda_grid();
  const auto z = normal_draws(100000, 21);
  const auto g = mgf_sigma(z, grid);
  CHECK(std::abs(g.sigma_point - 1.0) <= 0.05);
  CHECK(g.sigma >= g.sigma_point);
  CHECK(g.lambda_grid.size() == grid.size());
  for (std::size_t l = 0; l < grid.size(); ++l) {
    CHECK(g.upper_band[l] >= g.log_mgf[l]);
    CHECK(g.margins[l] <= 1e-12);
  }

  // log cosh(lambda) <= lambda^2 / 2.
  const auto r = mgf_sigma(as_vector(rademacher(100000, 1, 5)), grid);
  CHECK(r.sigma_point <= 1.0 + 0.02);

  const auto zero = mgf_sigma(std::vector<double>(1000, 0.0), grid);
  CHECK(zero.sigma == 0.0);
  CHECK(zero.sigma_point == 0.0);

  CHECK_THROWS_AS(mgf_sigma(std::vector<double>{20.0, -20.0, 0.0}, grid), GridTooWide);
  CHECK_THROWS_AS(mgf_sigma(std::vector<double>{}, grid), InsufficientSamples);
  const std::vector<double> bad{0.0, 1.0};
  CHECK_THROWS_AS(mgf_sigma(z, bad), DomainError);
}

TEST_CASE("MGF band restriction keeps the leading columns") {
  Eigen::MatrixXd cols(50000, 4);
  const Eigen::MatrixXd z = standard_normal_matrix(50000, 4, 2, 2);
  for (Index j = 0; j < 4; ++j) cols.col(j) = z.col(j) * (0.5 + 0.25 * static_cast<double>(j));
  const auto grid = default_lambda_grid();
  MgfOptions all, top;
  top.band_columns = 2;
  const auto full = mgf_sigma_columns(cols, grid, all);
  const auto part = mgf_sigma_columns(cols, grid, top);
  for (Index j = 2; j < 4; ++j) CHECK(part[j].sigma == doctest::Approx(full[j].sigma).epsilon(1e-12));
  for (Index j = 0; j < 2; ++j) {
    CHECK(part[j].sigma == part[j].sigma_point);
    CHECK(part[j].sigma_point == doctest::Approx(full[j].sigma_point).epsilon(1e-12));
  }
}

TEST_CASE("Orlicz and MGF scales agree up to constants") {
  const auto grid = std::vector<double>{-1.0, -0.5, -0.25, 0.25, 0.5, 1.0};
  const auto z = normal_draws(100000, 31);
  std::vector<std::vector<double>> laws;
  laws.push_back(z);
  laws.push_back(as_vector(rademacher(100000, 1, 32)));
  std::vector<double> uniform(100000), clipped(z);
  Engine engine = make_engine(33, 0, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : uniform) v = u(engine);
  for (double& v : clipped) v = std::clamp(v, -1.5, 1.5);
  laws.push_back(uniform);
  laws.push_back(clipped);
  for (const auto& law : laws) {
    const double ratio = psi2_scalar(law).value / mgf_sigma(law, grid).sigma;
    CHECK(ratio >= 0.25);
    CHECK(ratio <= 4.0);
  }
}

TEST_CASE("vector search on Rademacher vectors") {
  const Eigen::MatrixXd y = rademacher(20000, 16, 41);
  const SampleBatch batch{16, y.rows(), y, 41, 0};
  const auto est = psi2_vector(batch, 64, false);
  CHECK(est.value >= 1.0);
  CHECK(est.value <= 1.6);
  CHECK(est.ci_low <= est.value);
  CHECK(est.value <= est.ci_high);
  CHECK(est.n_directions >= 16);
  CHECK(est.argmax_direction.norm() == doctest::Approx(1.0));
}

TEST_CASE("vector search finds the aligned direction of a rank-one sign vector") {
  const Index n = 16;
  const auto x = sample_gaussian(CovarianceSpec::rank_one_ones(n), 20000, 5, 5);
  const Eigen::MatrixXd y = x.data.array().sign().matrix();
  DirectionSearch search;
  search.center = false;
  const auto found = psi2_vector_search(y, search);
  CHECK(found.estimate.value == doctest::Approx(std::sqrt(n / std::numbers::ln2)).epsilon(1e-9));
  const Eigen::VectorXd ones = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  CHECK(std::abs(found.estimate.argmax_direction.dot(ones)) == doctest::Approx(1.0));
  CHECK(found.directions.cols() == found.scores.size());
}

TEST_CASE("vector search degenerate inputs") {
  const auto zero = psi2_vector_search(Eigen::MatrixXd::Zero(10000, 3));
  CHECK(zero.estimate.value == 0.0);
  CHECK(zero.estimate.ci_high == 0.0);
  CHECK_THROWS_AS(psi2_vector_search(Eigen::MatrixXd::Ones(9999, 3)), InsufficientSamples);
  DirectionSearch bad;
  bad.extra_directions = Eigen::MatrixXd::Ones(4, 1);
  CHECK_THROWS_AS(psi2_vector_search(Eigen::MatrixXd::Ones(10000, 3), bad), DomainError);
}

TEST_CASE("vector search is monotone in the direction budget") {
  const Eigen::MatrixXd y = rademacher(10000, 8, 51) + 0.3 * standard_normal_matrix(10000, 8, 51, 1);
  double previous = 0.0;
  for (Index budget : {0, 4, 16, 64}) {
    DirectionSearch s;
    s.random_directions = budget;
    const double value = psi2_vector_search(y, s).estimate.value;
    CHECK(value >= previous);
    previous = value;
  }
  DirectionSearch polished;
  polished.refine = true;
  CHECK(psi2_vector_search(y, polished).estimate.value >= previous);
}

TEST_CASE("centred search ignores a constant shift") {
  const Eigen::MatrixXd y = standard_normal_matrix(10000, 6, 61, 0);
  Eigen::MatrixXd shifted = y;
  shifted.rowwise() += Eigen::RowVectorXd::LinSpaced(6, -3.0, 5.0);
  const double a = psi2_vector_search(y).estimate.value;
  const double b = psi2_vector_search(shifted).estimate.value;
  CHECK(std::abs(a - b) <= 1e-9 * a);
}

TEST_CASE("triangle combination") {
  Psi2Estimate a, b;
  a.value = 1.25;
  b.value = 2.5;
  CHECK(triangle_combine(a, b) == 3.75);
}

TEST_CASE("percentile interpolates order statistics") {
  CHECK(percentile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(percentile({1.0, 2.0}, 0.25) == 1.25);
  CHECK(percentile({1.0, 2.0}, 1.0) == 2.0);
  CHECK_THROWS_AS(percentile({}, 0.5), DomainError);
}
