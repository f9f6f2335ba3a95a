#include <doctest.h>

#include "subgauss/config.hpp"
#include "subgauss/error.hpp"
#include "subgauss/report.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace subgauss;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("subgauss_test_" + tag + "_" + std::to_string(std::random_device{}()));
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentReport sample_report() {
  ExperimentReport r;
  r.experiment = "demo";
  r.rows.push_back(make_row("demo", 16, 4.0, "sgn:orlicz", 1.5, 1.4, 1.6, std::nullopt));
  r.rows.push_back(make_row("demo", 16, 4.0, "sgn:mgf_fit", 1.2, 1.1, 1.2, 4.0));
  r.rows.push_back(make_row("demo", std::nullopt, std::nullopt, "flatness", 1.4, 1.0, 1.4, 1.3));
  return r;
}

}  // namespace

TEST_CASE("row pass rule") {
  CHECK(row_passes(5.0, std::nullopt));
  CHECK(row_passes(1.0, 1.0));
  CHECK_FALSE(row_passes(1.0 + 1e-12, 1.0));
  const auto r = sample_report();
  CHECK(r.rows[0].pass);
  CHECK(r.rows[1].pass);
  CHECK_FALSE(r.rows[2].pass);
  CHECK_FALSE(r.all_pass());
  CHECK(r.consistent());
  auto tampered = r;
  tampered.rows[2].pass = true;
  CHECK_FALSE(tampered.consistent());
  REQUIRE(r.find("sgn:mgf_fit", 16, 4.0) != nullptr);
  CHECK(r.find("sgn:mgf_fit", 16, 5.0) == nullptr);
  CHECK(r.find("missing") == nullptr);
}

TEST_CASE("csv layout") {
  ExperimentReport empty;
  CHECK(report_csv(empty) == "experiment,n,kappa_or_blank,estimator,value,ci_low,ci_high,bound,pass\n");
  const std::string csv = report_csv(sample_report());
  CHECK(csv.find("demo,16,4,sgn:orlicz,1.5,1.4,1.6,,true\n") != std::string::npos);
  CHECK(csv.find("demo,,,flatness,1.4,1,1.4,1.3,false\n") != std::string::npos);
  const auto j = report_json(sample_report());
  CHECK(j["rows"].size() == 3);
}

TEST_CASE("merging keeps every row") {
  const auto merged = merge_reports("all", {sample_report(), sample_report()});
  CHECK(merged.experiment == "all");
  CHECK(merged.rows.size() == 6);
}

TEST_CASE("emitting files") {
  const fs::path dir = fresh_dir("emit");
  const auto written = emit_report(sample_report(), dir);
  CHECK(written.size() == 3);
  CHECK(fs::exists(dir / "demo.csv"));
  CHECK(fs::exists(dir / "demo_psi2_vs_n.csv"));
  CHECK(fs::exists(dir / "demo.meta.json"));
  const auto meta = nlohmann::json::parse(slurp(dir / "demo.meta.json"));
  CHECK(meta["row_count"] == 3);
  CHECK(meta["all_pass"] == false);

  CHECK_THROWS_AS(emit_report(sample_report(), dir), IoError);
  CHECK_NOTHROW(emit_report(sample_report(), dir, EmitOptions{OutputFormat::csv, true}));
  CHECK_NOTHROW(emit_report(sample_report(), dir, EmitOptions{OutputFormat::json, true}));
  CHECK(nlohmann::json::parse(slurp(dir / "demo.json"))["rows"].size() == 3);

  // A regular file where the directory should be.
  CHECK_THROWS_AS(emit_report(sample_report(), dir / "demo.csv" / "sub"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("parsing configs") {
  const auto cfg = parse_config(R"({"experiment": "counterexample", "dims": [16, 64, 256], "seed": 7})");
  CHECK(cfg.experiment == ExperimentKind::counterexample);
  CHECK(cfg.seed == 7);
  CHECK(cfg.counterexample.dims == std::vector<std::int64_t>{16, 64, 256});
  CHECK(cfg.counterexample.seed == 7);

  try {
    parse_config(R"({"experiment": "theorem", "kappas": [1, 0.5]})");
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.key_path() == "kappas[1]");
  }
  try {
    parse_config(R"({"experiment": "theorem", "kapa": [1]})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.key_path() == "kapa");
  }
  try {
    parse_config(R"({"experiment": "all", "wishart": {"trails": 5}})");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.key_path() == "wishart.trails");
  }
  CHECK_THROWS_AS(parse_config(R"({"dims": [4]})"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "theorem", "refine": 3})"), SchemaError);
  CHECK_THROWS_AS(parse_config("{not json"), SchemaError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "nope"})"), ValidationError);
  CHECK_THROWS_AS(parse_config(R"({"experiment": "wishart", "format": "xml"})"), ValidationError);
}

TEST_CASE("config echo round-trips") {
  RunConfig cfg;
  cfg.experiment = ExperimentKind::all;
  cfg.theorem.kappas = {1.0, 2.5};
  cfg.theorem.maps = {"clamp", "threshold:0.25"};
  cfg.corollary.w_draws = 30;
  cfg.wishart.trials = 500;
  cfg.counterexample.samples = 20000;
  cfg.format = OutputFormat::json;
  cfg.apply_seed(99);
  const RunConfig back = parse_config(config_to_json(cfg).dump());
  CHECK(back == cfg);

  for (const char* kind : {"theorem", "corollary", "wishart", "counterexample"}) {
    auto single = parse_config(std::string(R"({"experiment": ")") + kind + "\"}");
    CHECK(parse_config(config_to_json(single).dump()) == single);
  }
}

TEST_CASE("seed defaults") {
  ::setenv("SUBGAUSS_SEED", "1234", 1);
  CHECK(default_seed() == 1234);
  ::setenv("SUBGAUSS_SEED", "garbage", 1);
  CHECK(default_seed() == kDefaultSeed);
  ::unsetenv("SUBGAUSS_SEED");
  CHECK(default_seed() == kDefaultSeed);
  CHECK(parse_experiment_kind("wishart") == ExperimentKind::wishart);
  CHECK_FALSE(parse_experiment_kind("other").has_value());
}
