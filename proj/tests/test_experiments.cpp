#include <doctest.h>

#include "subgauss/error.hpp"
#include "subgauss/experiments.hpp"
#include "subgauss/gaussian_core.hpp"
#include "subgauss/psi2.hpp"
#include "subgauss/random.hpp"

#include <cmath>
#include <numbers>

using namespace subgauss;

TEST_CASE("variance proxy bound") {
  CHECK(sigma_sq_bound(1.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(sigma_sq_bound(1.0 + std::numbers::pi / 2.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(sigma_sq_bound(10.0) == doctest::Approx(9.7296).epsilon(1e-5));
  double previous = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double kappa = std::pow(10.0, i / 100.0);
    const double b = sigma_sq_bound(kappa);
    CHECK(b >= previous);
    CHECK(b <= 4.0 * kappa + 1e-12);
    previous = b;
  }
  CHECK_THROWS_AS(sigma_sq_bound(0.999), DomainError);
  CHECK_THROWS_AS(sigma_sq_bound(std::nan("")), DomainError);
}

TEST_CASE("conditioned covariances") {
  const auto id = make_conditioned_covariance(5, 1.0, 3);
  CHECK(id.matrix() == Eigen::MatrixXd::Identity(5, 5));
  for (Index n : {2, 8, 33}) {
    const auto cov = make_conditioned_covariance(n, 9.0, 7);
    CHECK(std::abs(condition_number(cov) - 9.0) <= 1e-9);
    CHECK(cov.lambda_min() == doctest::Approx(1.0));
  }
  const Eigen::MatrixXd q = random_orthogonal(12, 5);
  CHECK((q.transpose() * q - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(random_orthogonal(12, 5) == q);
  CHECK(random_orthogonal(12, 6) != q);
}

TEST_CASE("row partition") {
  const Eigen::MatrixXd w5 = standard_normal_matrix(5, 5, 1, 1);
  const auto [a, b] = partition_rows(w5);
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 5);
  CHECK(b.rows() == 3);
  CHECK(b.cols() == 5);
  Eigen::MatrixXd stacked(5, 5);
  stacked << a, b;
  CHECK(stacked == w5);

  const auto [c, d] = partition_rows(Eigen::MatrixXd::Ones(2, 2));
  CHECK(c.rows() == 1);
  CHECK(d.rows() == 1);
  CHECK(c.cols() == 2);
  CHECK_THROWS_AS(partition_rows(Eigen::MatrixXd::Ones(1, 3)), DimensionTooSmall);
}

TEST_CASE("sign of isotropic Gaussian obeys the Hoeffding envelope") {
  // Coordinates are independent signs, so log E exp(lambda <v, Y>) <= lambda^2 / 2 <= 2 lambda^2.
  const Index n = 10;
  const Eigen::MatrixXd y = standard_normal_matrix(100000, n, 12, 0).array().sign().matrix();
  Eigen::MatrixXd dirs(n, 50);
  for (Index k = 0; k < 50; ++k) {
    Engine engine = make_engine(12, 1, static_cast<std::uint64_t>(k));
    std::normal_distribution<double> z;
    for (Index i = 0; i < n; ++i) dirs(i, k) = z(engine);
    dirs.col(k).normalize();
  }
  const Eigen::MatrixXd proj = y * dirs;
  for (double lambda : {-1.0, -0.5, -0.25, 0.25, 0.5, 1.0})
    for (Index k = 0; k < 50; ++k) {
      const double log_mgf = std::log((lambda * proj.col(k).array()).exp().mean());
      CHECK(log_mgf <= 2.0 * lambda * lambda);
    }
}

TEST_CASE("small theorem run") {
  TheoremConfig cfg;
  cfg.dims = {4, 8};
  cfg.kappas = {1.0, 4.0};
  cfg.maps = {"sgn", "const:0.5"};
  cfg.samples_per_cell = 20000;
  cfg.directions = 8;
  const auto report = run_theorem_experiment(cfg);
  CHECK(report.experiment == "theorem");
  CHECK(report.consistent());
  CHECK(report.all_pass());
  for (std::int64_t n : cfg.dims)
    for (double kappa : cfg.kappas) {
      const auto* fit = report.find("sgn:mgf_fit", n, kappa);
      REQUIRE(fit != nullptr);
      CHECK(fit->value <= 2.0 * std::sqrt(kappa));
      const auto* env = report.find("sgn:mgf_envelope", n, kappa);
      REQUIRE(env != nullptr);
      CHECK(*env->bound == doctest::Approx(sigma_sq_bound(kappa)));
      // A constant map is exactly centred away.
      const auto* flat = report.find("const:0.5:mgf_fit", n, kappa);
      REQUIRE(flat != nullptr);
      CHECK(flat->value == 0.0);
    }
  REQUIRE(report.find("sgn:orlicz_flatness", std::nullopt, 4.0) != nullptr);
  CHECK(report.find("sgn:orlicz_flatness", std::nullopt, 4.0)->bound == kFlatnessRatio);

  const auto again = run_theorem_experiment(cfg);
  REQUIRE(again.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) CHECK(again.rows[i].value == report.rows[i].value);
}

TEST_CASE("small corollary run") {
  CorollaryConfig cfg;
  cfg.dims = {8};
  cfg.w_draws = 20;
  cfg.samples_per_w = 10000;
  cfg.directions = 8;
  const auto report = run_corollary_experiment(cfg);
  CHECK(report.consistent());
  const auto* sym = report.find("symmetry:coords_beyond_3se", 8);
  REQUIRE(sym != nullptr);
  CHECK(sym->value <= kSymmetryExceedanceRate);
  const auto* combined = report.find("combined:mean_orlicz", 8);
  const auto* direct = report.find("direct:mean_orlicz", 8);
  REQUIRE(combined != nullptr);
  REQUIRE(direct != nullptr);
  CHECK(direct->value <= combined->value);
  for (const auto& row : report.rows)
    if (row.estimator == "block1:orlicz") CHECK(row.value <= std::sqrt(4.0 / std::numbers::ln2) * (1.0 + 1e-9));
  CHECK(report.find("combined:orlicz_flatness") != nullptr);
}

TEST_CASE("Wishart conditioning") {
  WishartConfig cfg;
  cfg.dims = {2, 16};
  cfg.trials = 200;
  const auto report = run_wishart_conditioning(cfg);
  const auto* two = report.find("kappa1:median", 2);
  REQUIRE(two != nullptr);
  CHECK(two->value == doctest::Approx(1.0));
  CHECK(two->ci_high == doctest::Approx(1.0));
  const auto* ex = report.find("kappa1:exceedance", 16);
  REQUIRE(ex != nullptr);
  CHECK(ex->kappa == cfg.kappa_threshold);
  CHECK(ex->bound == cfg.max_exceedance_rate);
  CHECK(report.consistent());
}

TEST_CASE("counterexample grows like sqrt(n)") {
  CounterexampleConfig cfg;
  cfg.dims = {4, 16, 64};
  cfg.samples = 10000;
  cfg.directions = 4;
  const auto report = run_counterexample(cfg);
  for (std::int64_t n : cfg.dims) {
    const auto* row = report.find("orlicz", n);
    REQUIRE(row != nullptr);
    CHECK(row->value == doctest::Approx(std::sqrt(n / std::numbers::ln2)).epsilon(1e-9));
  }
  const auto* slope = report.find("orlicz:slope_minus_half");
  REQUIRE(slope != nullptr);
  CHECK(slope->value <= 1e-9);
  CHECK(report.all_pass());

  const auto again = run_counterexample(cfg);
  REQUIRE(again.rows.size() == report.rows.size());
  for (std::size_t i = 0; i < report.rows.size(); ++i) CHECK(again.rows[i].value == report.rows[i].value);
}

TEST_CASE("log-log slope") {
  CHECK(log_log_slope({1.0, 4.0, 16.0}, {3.0, 6.0, 12.0}) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK_THROWS_AS(log_log_slope({1.0}, {1.0}), DomainError);
}

TEST_CASE("config validation names the field") {
  TheoremConfig t;
  t.kappas = {1.0, 0.5};
  try {
    validate(t);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key_path() == "kappas[1]");
  }
  t = {};
  t.maps = {"sgn", "nope"};
  CHECK_THROWS_AS(validate(t), ValidationError);
  CorollaryConfig c;
  c.dims = {2};
  CHECK_THROWS_AS(validate(c), ValidationError);
  WishartConfig w;
  w.trials = 10;
  CHECK_THROWS_AS(validate(w), ValidationError);
  CounterexampleConfig x;
  x.dims = {16, 32};
  CHECK_THROWS_AS(validate(x), ValidationError);
}
