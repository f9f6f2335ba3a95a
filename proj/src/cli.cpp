#include "subgauss/cli.hpp"

#include "subgauss/config.hpp"
#include "subgauss/error.hpp"
#include "subgauss/experiments.hpp"
#include "subgauss/gaussian_core.hpp"
#include "subgauss/nonlinearity.hpp"
#include "subgauss/parallel.hpp"
#include "subgauss/psi2.hpp"
#include "subgauss/random.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

namespace subgauss {
namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

class UsageError : public Error {
 public:
  using Error::Error;
};

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  bool force = false;
  std::optional<std::size_t> threads;
  std::optional<std::vector<std::int64_t>> dims;
  std::optional<std::vector<double>> kappas;
  std::optional<std::vector<std::string>> maps;
  std::optional<std::int64_t> samples;
  std::optional<std::int64_t> directions;
  std::optional<std::int64_t> w_draws;
  std::optional<std::int64_t> trials;
  bool refine = false;
};

void add_common_options(CLI::App& cmd, CliOptions& o) {
  cmd.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd.add_option("--seed", o.seed, "Master seed (default $SUBGAUSS_SEED or 42)");
  cmd.add_option("--out", o.out, "Output directory");
  cmd.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd.add_flag("--force", o.force, "Overwrite existing output files");
  cmd.add_option("--threads", o.threads, "Worker threads (speed only, never results)")->check(CLI::PositiveNumber);
}

void add_parameter_options(CLI::App& cmd, CliOptions& o, std::string_view kind) {
  cmd.add_option("--dims", o.dims, "Comma-separated dimensions")->delimiter(',');
  if (kind == "theorem") {
    cmd.add_option("--kappas", o.kappas, "Comma-separated condition numbers")->delimiter(',');
    cmd.add_option("--maps", o.maps, "Comma-separated map names")->delimiter(',');
    cmd.add_flag("--refine", o.refine, "Polish the best direction by coordinate ascent");
  }
  if (kind != "wishart") {
    cmd.add_option("--samples", o.samples, "Samples per cell / per W draw");
    cmd.add_option("--directions", o.directions, "Random directions per search");
  }
  if (kind == "corollary") cmd.add_option("--w-draws", o.w_draws, "Number of W realisations");
  if (kind == "wishart") cmd.add_option("--trials", o.trials, "Trials per dimension");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

RunConfig build_config(ExperimentKind kind, const CliOptions& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) {
    cfg = parse_config(read_file(o.config_path));
    if (cfg.experiment != kind)
      throw UsageError("config file describes experiment \"" + std::string(to_string(cfg.experiment)) +
                       "\" but subcommand is \"" + std::string(to_string(kind)) + "\"");
  } else {
    cfg.experiment = kind;
    cfg.apply_seed(default_seed());
  }
  if (o.seed) cfg.apply_seed(*o.seed);
  if (o.out) cfg.output_dir = *o.out;
  if (o.format) cfg.format = *o.format == "json" ? OutputFormat::json : OutputFormat::csv;

  switch (kind) {
    case ExperimentKind::theorem:
      if (o.dims) cfg.theorem.dims = *o.dims;
      if (o.kappas) cfg.theorem.kappas = *o.kappas;
      if (o.maps) cfg.theorem.maps = *o.maps;
      if (o.samples) cfg.theorem.samples_per_cell = *o.samples;
      if (o.directions) cfg.theorem.directions = *o.directions;
      if (o.refine) cfg.theorem.refine = true;
      validate(cfg.theorem);
      break;
    case ExperimentKind::corollary:
      if (o.dims) cfg.corollary.dims = *o.dims;
      if (o.samples) cfg.corollary.samples_per_w = *o.samples;
      if (o.directions) cfg.corollary.directions = *o.directions;
      if (o.w_draws) cfg.corollary.w_draws = *o.w_draws;
      validate(cfg.corollary);
      break;
    case ExperimentKind::wishart:
      if (o.dims) cfg.wishart.dims = *o.dims;
      if (o.trials) cfg.wishart.trials = *o.trials;
      validate(cfg.wishart);
      break;
    case ExperimentKind::counterexample:
      if (o.dims) cfg.counterexample.dims = *o.dims;
      if (o.samples) cfg.counterexample.samples = *o.samples;
      if (o.directions) cfg.counterexample.directions = *o.directions;
      validate(cfg.counterexample);
      break;
    case ExperimentKind::all:
      break;
  }
  return cfg;
}

ExperimentReport run_experiments(const RunConfig& cfg) {
  switch (cfg.experiment) {
    case ExperimentKind::theorem: return run_theorem_experiment(cfg.theorem);
    case ExperimentKind::corollary: return run_corollary_experiment(cfg.corollary);
    case ExperimentKind::wishart: return run_wishart_conditioning(cfg.wishart);
    case ExperimentKind::counterexample: return run_counterexample(cfg.counterexample);
    case ExperimentKind::all:
      return merge_reports("all", {run_theorem_experiment(cfg.theorem), run_corollary_experiment(cfg.corollary),
                                   run_wishart_conditioning(cfg.wishart), run_counterexample(cfg.counterexample)});
  }
  throw UsageError("unknown experiment");
}

int run_experiment_command(ExperimentKind kind, const CliOptions& o, std::ostream& out) {
  const RunConfig cfg = build_config(kind, o);
  const std::string started = utc_timestamp();
  ExperimentReport report = run_experiments(cfg);
  report.metadata["config"] = config_to_json(cfg);
  report.metadata["started_at"] = started;
  report.metadata["finished_at"] = utc_timestamp();
  report.metadata["threads"] = thread_count();

  const auto files = emit_report(report, cfg.output_dir, EmitOptions{cfg.format, o.force});
  std::size_t failed = 0;
  for (const auto& row : report.rows)
    if (!row.pass) ++failed;
  out << report.experiment << ": " << report.rows.size() << " rows, " << failed << " bound violations\n";
  for (const auto& f : files) out << "  wrote " << f.string() << "\n";
  return failed == 0 ? kExitPass : kExitBoundViolated;
}

int run_selftest_command(const CliOptions& o, std::ostream& out) {
  bool ok = true;
  for (const auto& c : run_selftest(o.seed.value_or(default_seed()))) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (tolerance " << c.tolerance << ")\n";
    ok = ok && c.pass;
  }
  return ok ? kExitPass : kExitBoundViolated;
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::uint64_t seed) {
  std::vector<SelftestCheck> checks;
  auto add = [&](std::string name, double value, double tolerance) {
    checks.push_back({std::move(name), value, tolerance, value <= tolerance});
  };

  const BoundedMap sgn = sgn_map();
  for (double a : {0.25, 1.0, 4.0}) {
    double worst = 0.0;
    for (int k = -50; k <= 50; ++k) {
      const double x = k / 10.0;
      const double numeric = smoothed_mean(sgn, a, x, SmoothingMethod::quadrature);
      worst = std::max(worst, std::abs(numeric - std::erf(x / std::sqrt(2.0 * a))));
    }
    std::ostringstream name;
    name << "smoothed sgn vs erf, a = " << a;
    add(name.str(), worst, 1e-6);
  }

  constexpr Index kDraws = 1000000;
  const Eigen::MatrixXd gauss = standard_normal_matrix(kDraws, 1, seed, 0x5e1f);
  const Psi2Estimate g = psi2_scalar({gauss.data(), static_cast<std::size_t>(kDraws)}, {200, seed, 1});
  add("psi2 of N(0,1) vs sqrt(8/3)", std::abs(g.value - std::sqrt(8.0 / 3.0)), 0.03);

  std::vector<double> signs(static_cast<std::size_t>(kDraws));
  Engine engine = make_engine(seed, 0x5e1f, 1);
  for (auto& s : signs) s = (engine() >> 63) ? 1.0 : -1.0;
  const Psi2Estimate r = psi2_scalar(signs, {200, seed, 2});
  add("psi2 of Rademacher vs 1/sqrt(ln 2)", std::abs(r.value - 1.0 / std::sqrt(std::numbers::ln2)), 0.02);

  const Eigen::MatrixXd w = standard_normal_matrix(8, 8, seed, 0x5e1f + 1);
  const CovarianceSpec cov = CovarianceSpec::wishart_of(w);
  const CovarianceSplit split = split_covariance(cov);
  add("split reconstruction max error", (split.reconstruct() - cov.matrix()).cwiseAbs().maxCoeff(), 1e-10);
  return checks;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo laboratory for subgaussian norms of bounded maps of Gaussian vectors", "subgauss"};
  app.require_subcommand(1);
  CliOptions opts;

  std::vector<std::pair<CLI::App*, ExperimentKind>> commands;
  for (auto kind : {ExperimentKind::theorem, ExperimentKind::corollary, ExperimentKind::wishart,
                    ExperimentKind::counterexample, ExperimentKind::all}) {
    const std::string name(to_string(kind));
    CLI::App* cmd = app.add_subcommand(
        name, kind == ExperimentKind::all ? std::string("Run every experiment") : "Run the " + name + " experiment");
    add_common_options(*cmd, opts);
    if (kind != ExperimentKind::all) add_parameter_options(*cmd, opts, name);
    commands.emplace_back(cmd, kind);
  }
  CLI::App* selftest = app.add_subcommand("selftest", "Run the closed-form oracle suite");
  selftest->add_option("--seed", opts.seed, "Seed for the sampled checks");
  selftest->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help() << "\n" << config_schema_help();
    return kExitUsage;
  }

  if (opts.threads) set_thread_count(*opts.threads);

  try {
    if (selftest->parsed()) return run_selftest_command(opts, out);
    for (const auto& [cmd, kind] : commands)
      if (cmd->parsed()) return run_experiment_command(kind, opts, out);
    err << app.help();
    return kExitUsage;
  } catch (const SchemaError& e) {
    err << "config error: " << e.what() << "\n\n" << config_schema_help();
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "invalid value: " << e.what() << "\n\n" << config_schema_help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n\n" << config_schema_help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitOperational;
  } catch (...) {
    err << "error: unknown failure\n";
    return kExitOperational;
  }
}

}  // namespace subgauss
