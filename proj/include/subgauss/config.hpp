#pragma once

#include "subgauss/experiments.hpp"
#include "subgauss/report.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace subgauss {

enum class ExperimentKind { theorem, corollary, wishart, counterexample, all };

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

inline constexpr std::uint64_t kDefaultSeed = 42;

// Seed from SUBGAUSS_SEED when set and parseable, otherwise 42.
std::uint64_t default_seed();

struct RunConfig {
  ExperimentKind experiment = ExperimentKind::all;
  std::uint64_t seed = kDefaultSeed;
  std::string output_dir = "results";
  OutputFormat format = OutputFormat::csv;
  TheoremConfig theorem;
  CorollaryConfig corollary;
  WishartConfig wishart;
  CounterexampleConfig counterexample;

  bool operator==(const RunConfig&) const = default;
  // Pushes the top-level seed into every experiment config.
  void apply_seed(std::uint64_t value);
};

// Strict-schema JSON. A single experiment takes its parameters as top-level
// keys; "all" takes one object per experiment under its name. Unknown keys
// raise SchemaError with the key path; bad values raise ValidationError.
RunConfig parse_config(std::string_view text);
RunConfig parse_config_json(const nlohmann::json& doc);

// Canonical JSON form accepted by parse_config (round trip).
nlohmann::json config_to_json(const RunConfig& cfg);

// Human-readable description of the accepted keys.
std::string config_schema_help();

}  // namespace subgauss
