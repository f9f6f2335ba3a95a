#include "subgauss/report.hpp"

#include "subgauss/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace subgauss {
namespace {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

bool row_passes(double value, const std::optional<double>& bound) { return !bound || value <= *bound; }

ReportRow make_row(std::string experiment, std::optional<std::int64_t> n, std::optional<double> kappa,
                   std::string estimator, double value, double ci_low, double ci_high, std::optional<double> bound) {
  ReportRow row{std::move(experiment), n, kappa, std::move(estimator), value, ci_low, ci_high, bound, true};
  row.pass = row_passes(value, bound);
  return row;
}

bool ExperimentReport::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

bool ExperimentReport::consistent() const {
  for (const auto& r : rows)
    if (r.pass != row_passes(r.value, r.bound)) return false;
  return true;
}

const ReportRow* ExperimentReport::find(std::string_view estimator, std::optional<std::int64_t> n,
                                        std::optional<double> kappa) const {
  for (const auto& r : rows) {
    if (r.estimator != estimator) continue;
    if (n && r.n != n) continue;
    if (kappa && r.kappa != kappa) continue;
    return &r;
  }
  return nullptr;
}

ExperimentReport merge_reports(std::string name, const std::vector<ExperimentReport>& parts) {
  ExperimentReport out;
  out.experiment = std::move(name);
  out.metadata["parts"] = nlohmann::json::object();
  for (const auto& p : parts) {
    out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    out.metadata["parts"][p.experiment] = p.metadata;
  }
  return out;
}

std::string report_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "experiment,n,kappa_or_blank,estimator,value,ci_low,ci_high,bound,pass\n";
  for (const auto& r : report.rows) {
    os << r.experiment << ',' << (r.n ? std::to_string(*r.n) : "") << ',' << (r.kappa ? format_number(*r.kappa) : "")
       << ',' << r.estimator << ',' << format_number(r.value) << ',' << format_number(r.ci_low) << ','
       << format_number(r.ci_high) << ',' << (r.bound ? format_number(*r.bound) : "") << ','
       << (r.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string psi2_curve_csv(const ExperimentReport& report) {
  std::ostringstream os;
  os << "experiment,series,n,psi2,ci_low,ci_high\n";
  constexpr std::string_view suffix = "orlicz";
  for (const auto& r : report.rows) {
    if (!r.n || !std::string_view(r.estimator).ends_with(suffix)) continue;
    std::string series = r.estimator;
    if (r.kappa) series += "@kappa=" + format_number(*r.kappa);
    os << r.experiment << ',' << series << ',' << *r.n << ',' << format_number(r.value) << ','
       << format_number(r.ci_low) << ',' << format_number(r.ci_high) << '\n';
  }
  return os.str();
}

nlohmann::json report_json(const ExperimentReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"experiment", r.experiment},
                    {"n", r.n ? nlohmann::json(*r.n) : nlohmann::json(nullptr)},
                    {"kappa", optional_json(r.kappa)},
                    {"estimator", r.estimator},
                    {"value", r.value},
                    {"ci_low", r.ci_low},
                    {"ci_high", r.ci_high},
                    {"bound", optional_json(r.bound)},
                    {"pass", r.pass}});
  }
  return {{"experiment", report.experiment}, {"rows", rows}, {"metadata", report.metadata}};
}

std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, const std::filesystem::path& output_dir,
                                               const EmitOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec || !std::filesystem::is_directory(output_dir))
    throw IoError("cannot create output directory " + output_dir.string());

  const std::string base = report.experiment.empty() ? "report" : report.experiment;
  std::vector<std::filesystem::path> written;
  std::vector<std::pair<std::filesystem::path, std::string>> files;
  if (options.format == OutputFormat::csv) {
    files.emplace_back(output_dir / (base + ".csv"), report_csv(report));
    files.emplace_back(output_dir / (base + "_psi2_vs_n.csv"), psi2_curve_csv(report));
  } else {
    files.emplace_back(output_dir / (base + ".json"), report_json(report).dump(2) + "\n");
  }
  nlohmann::json sidecar = report.metadata;
  sidecar["experiment"] = report.experiment;
  sidecar["row_count"] = report.rows.size();
  sidecar["all_pass"] = report.all_pass();
  nlohmann::json names = nlohmann::json::array();
  for (const auto& [path, _] : files) names.push_back(path.filename().string());
  sidecar["files"] = names;
  files.emplace_back(output_dir / (base + ".meta.json"), sidecar.dump(2) + "\n");

  if (!options.force)
    for (const auto& [path, _] : files)
      if (std::filesystem::exists(path, ec)) throw IoError("refusing to overwrite " + path.string() + " (use --force)");
  for (const auto& [path, contents] : files) {
    write_file(path, contents);
    written.push_back(path);
  }
  return written;
}

}  // namespace subgauss
