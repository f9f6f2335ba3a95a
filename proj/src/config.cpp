#include "subgauss/config.hpp"

#include "subgauss/error.hpp"

#include <cstdlib>
#include <set>
#include <sstream>

namespace subgauss {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::theorem: return "theorem";
    case ExperimentKind::corollary: return "corollary";
    case ExperimentKind::wishart: return "wishart";
    case ExperimentKind::counterexample: return "counterexample";
    case ExperimentKind::all: return "all";
  }
  return "all";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view name) {
  for (auto k : {ExperimentKind::theorem, ExperimentKind::corollary, ExperimentKind::wishart,
                 ExperimentKind::counterexample, ExperimentKind::all})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("SUBGAUSS_SEED")) {
    try {
      std::size_t used = 0;
      const std::string s(env);
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  return kDefaultSeed;
}

void RunConfig::apply_seed(std::uint64_t value) {
  seed = value;
  theorem.seed = corollary.seed = wishart.seed = counterexample.seed = value;
}

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix.empty() ? key : prefix + "." + key; }

// Reads typed fields out of one JSON object and remembers which keys were
// consumed so leftovers can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw SchemaError(path_.empty() ? "<root>" : path_, "expected a JSON object");
  }

  template <class T>
  void read(const std::string& key, T& out) {
    allowed_.insert(key);
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    out = convert<T>(*it, join(path_, key));
  }

  const json* child(const std::string& key) {
    allowed_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void reject_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!allowed_.count(it.key())) throw SchemaError(join(path_, it.key()), "unknown key \"" + it.key() + "\"");
  }

  const std::string& path() const { return path_; }

 private:
  template <class T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw SchemaError(path, "expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw SchemaError(path, "expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      if (!v.is_number_unsigned()) throw SchemaError(path, "expected a nonnegative integer");
      return v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
      return v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw SchemaError(path, "expected a number");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw SchemaError(path, "expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> allowed_;
};

void read_fields(ObjectReader& r, TheoremConfig& c) {
  r.read("dims", c.dims);
  r.read("kappas", c.kappas);
  r.read("maps", c.maps);
  r.read("samples", c.samples_per_cell);
  r.read("directions", c.directions);
  r.read("refine", c.refine);
  r.read("lambdas", c.lambdas);
}

void read_fields(ObjectReader& r, CorollaryConfig& c) {
  r.read("dims", c.dims);
  r.read("w_draws", c.w_draws);
  r.read("samples", c.samples_per_w);
  r.read("directions", c.directions);
  r.read("lambdas", c.lambdas);
  r.read("kappa_threshold", c.kappa_threshold);
}

void read_fields(ObjectReader& r, WishartConfig& c) {
  r.read("dims", c.dims);
  r.read("trials", c.trials);
  r.read("kappa_threshold", c.kappa_threshold);
  r.read("max_exceedance_rate", c.max_exceedance_rate);
}

void read_fields(ObjectReader& r, CounterexampleConfig& c) {
  r.read("dims", c.dims);
  r.read("samples", c.samples);
  r.read("directions", c.directions);
}

json fields_json(const TheoremConfig& c) {
  return {{"dims", c.dims},         {"kappas", c.kappas},         {"maps", c.maps},      {"samples", c.samples_per_cell},
          {"directions", c.directions}, {"refine", c.refine}, {"lambdas", c.lambdas}};
}

json fields_json(const CorollaryConfig& c) {
  return {{"dims", c.dims},           {"w_draws", c.w_draws}, {"samples", c.samples_per_w},
          {"directions", c.directions}, {"lambdas", c.lambdas}, {"kappa_threshold", c.kappa_threshold}};
}

json fields_json(const WishartConfig& c) {
  return {{"dims", c.dims},
          {"trials", c.trials},
          {"kappa_threshold", c.kappa_threshold},
          {"max_exceedance_rate", c.max_exceedance_rate}};
}

json fields_json(const CounterexampleConfig& c) {
  return {{"dims", c.dims}, {"samples", c.samples}, {"directions", c.directions}};
}

template <class Config>
void validate_with_prefix(const Config& cfg, const std::string& prefix) {
  try {
    validate(cfg);
  } catch (const ValidationError& e) {
    const std::string what = std::string(e.what()).substr(e.key_path().size() + 2);
    throw ValidationError(join(prefix, e.key_path()), what);
  }
}

template <class Config>
void read_section(ObjectReader& root, const std::string& key, Config& cfg) {
  if (const json* section = root.child(key)) {
    ObjectReader r(*section, key);
    read_fields(r, cfg);
    r.reject_unknown();
  }
}

}  // namespace

RunConfig parse_config_json(const json& doc) {
  ObjectReader root(doc, "");
  RunConfig cfg;

  std::string experiment;
  root.read("experiment", experiment);
  if (experiment.empty()) throw SchemaError("experiment", "missing required key \"experiment\"");
  const auto kind = parse_experiment_kind(experiment);
  if (!kind) throw ValidationError("experiment", "unknown experiment \"" + experiment + "\"");
  cfg.experiment = *kind;

  std::uint64_t seed = default_seed();
  root.read("seed", seed);
  root.read("output_dir", cfg.output_dir);
  std::string format = "csv";
  root.read("format", format);
  if (format == "csv")
    cfg.format = OutputFormat::csv;
  else if (format == "json")
    cfg.format = OutputFormat::json;
  else
    throw ValidationError("format", "expected \"csv\" or \"json\", got \"" + format + "\"");

  switch (cfg.experiment) {
    case ExperimentKind::theorem: read_fields(root, cfg.theorem); break;
    case ExperimentKind::corollary: read_fields(root, cfg.corollary); break;
    case ExperimentKind::wishart: read_fields(root, cfg.wishart); break;
    case ExperimentKind::counterexample: read_fields(root, cfg.counterexample); break;
    case ExperimentKind::all:
      read_section(root, "theorem", cfg.theorem);
      read_section(root, "corollary", cfg.corollary);
      read_section(root, "wishart", cfg.wishart);
      read_section(root, "counterexample", cfg.counterexample);
      break;
  }
  root.reject_unknown();
  cfg.apply_seed(seed);

  const bool all = cfg.experiment == ExperimentKind::all;
  if (all || cfg.experiment == ExperimentKind::theorem) validate_with_prefix(cfg.theorem, all ? "theorem" : "");
  if (all || cfg.experiment == ExperimentKind::corollary) validate_with_prefix(cfg.corollary, all ? "corollary" : "");
  if (all || cfg.experiment == ExperimentKind::wishart) validate_with_prefix(cfg.wishart, all ? "wishart" : "");
  if (all || cfg.experiment == ExperimentKind::counterexample)
    validate_with_prefix(cfg.counterexample, all ? "counterexample" : "");
  return cfg;
}

RunConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("<root>", std::string("malformed JSON: ") + e.what());
  }
  return parse_config_json(doc);
}

json config_to_json(const RunConfig& cfg) {
  json out = {{"experiment", to_string(cfg.experiment)},
              {"seed", cfg.seed},
              {"output_dir", cfg.output_dir},
              {"format", cfg.format == OutputFormat::csv ? "csv" : "json"}};
  switch (cfg.experiment) {
    case ExperimentKind::theorem: out.update(fields_json(cfg.theorem)); break;
    case ExperimentKind::corollary: out.update(fields_json(cfg.corollary)); break;
    case ExperimentKind::wishart: out.update(fields_json(cfg.wishart)); break;
    case ExperimentKind::counterexample: out.update(fields_json(cfg.counterexample)); break;
    case ExperimentKind::all:
      out["theorem"] = fields_json(cfg.theorem);
      out["corollary"] = fields_json(cfg.corollary);
      out["wishart"] = fields_json(cfg.wishart);
      out["counterexample"] = fields_json(cfg.counterexample);
      break;
  }
  return out;
}

std::string config_schema_help() {
  return R"(Config file: a JSON object, unknown keys are rejected.
  common:          experiment ("theorem"|"corollary"|"wishart"|"counterexample"|"all"),
                   seed (uint, default $SUBGAUSS_SEED or 42), output_dir (string), format ("csv"|"json")
  theorem:         dims [n>=2], kappas [>=1], maps ["sgn","clamp","threshold:t","cos","const:c"],
                   samples (>=20000), directions, refine (bool), lambdas [nonzero]
  corollary:       dims [n>=4], w_draws (>=20), samples (>=10000), directions, lambdas, kappa_threshold
  wishart:         dims [n>=2], trials (>=100), kappa_threshold, max_exceedance_rate
  counterexample:  dims (>=3 values spanning a factor >= 8), samples (>=10000), directions
For "all", put each experiment's keys in an object named after it, e.g.
  {"experiment": "all", "seed": 7, "wishart": {"trials": 500}}
)";
}

}  // namespace subgauss
