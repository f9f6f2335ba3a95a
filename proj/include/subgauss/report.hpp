#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace subgauss {

// One line of an experiment table. A row passes iff it has no bound or its
// value does not exceed the bound; informational rows carry no bound.
struct ReportRow {
  std::string experiment;
  std::optional<std::int64_t> n;
  std::optional<double> kappa;
  std::string estimator;
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::optional<double> bound;
  bool pass = true;
};

bool row_passes(double value, const std::optional<double>& bound);

ReportRow make_row(std::string experiment, std::optional<std::int64_t> n, std::optional<double> kappa,
                   std::string estimator, double value, double ci_low, double ci_high, std::optional<double> bound);

struct ExperimentReport {
  std::string experiment;
  std::vector<ReportRow> rows;
  nlohmann::json metadata = nlohmann::json::object();

  bool all_pass() const;
  // Rows whose value and bound reproduce their stored pass flag.
  bool consistent() const;
  const ReportRow* find(std::string_view estimator, std::optional<std::int64_t> n = std::nullopt,
                        std::optional<double> kappa = std::nullopt) const;
};

ExperimentReport merge_reports(std::string name, const std::vector<ExperimentReport>& parts);

enum class OutputFormat { csv, json };

std::string report_csv(const ExperimentReport& report);
// Long format for plotting Orlicz estimates against n.
std::string psi2_curve_csv(const ExperimentReport& report);
nlohmann::json report_json(const ExperimentReport& report);

struct EmitOptions {
  OutputFormat format = OutputFormat::csv;
  bool force = false;
};

// csv: <name>.csv, <name>_psi2_vs_n.csv and the <name>.meta.json sidecar.
// json: <name>.json with rows and metadata, plus the sidecar.
// Throws IoError when the directory is not writable or a file exists and
// force is false.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report, const std::filesystem::path& output_dir,
                                               const EmitOptions& options = {});

}  // namespace subgauss
