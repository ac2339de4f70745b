#include "hydrocast/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "hydrocast/error.hpp"
#include "hydrocast/hash.hpp"
#include "json.hpp"

namespace hydrocast::cli {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("config: '" + label() + "' must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ValidationError("config: '" + child(key) + "' has the wrong type");
    }
  }

  std::optional<Section> section(const char* key) {
    seen_.insert(key);
    if (!j_.contains(key)) return std::nullopt;
    return Section(j_.at(key), child(key));
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError("config: unknown key '" + child(key) + "'");
    }
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const char* why) {
  if (!ok) throw ValidationError("config: '" + key + "' " + why);
}

DateRange parse_range(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_string() || !j[1].is_string()) {
    throw ValidationError("config: '" + key + "' must be [\"YYYY-MM-DD\", \"YYYY-MM-DD\"]");
  }
  const DateRange r{Date::parse(j[0].get<std::string>()), Date::parse(j[1].get<std::string>())};
  require(!r.empty(), key, "ends before it starts");
  return r;
}

void read_model(Section s, ModelConfig& m) {
  s.get("hindcast_length", m.hindcast_length);
  s.get("hidden_size", m.hidden_size);
  s.get("batch_size", m.batch_size);
  s.get("training_steps", m.training_steps);
  s.get("learning_rate", m.learning_rate);
  s.get("cosine_decay", m.cosine_decay);
  s.get("grad_clip_norm", m.grad_clip_norm);
  s.get("validate_every", m.validate_every);
  s.get("ensemble_size", m.ensemble_size);
  s.get("statics_in_decoder", m.statics_in_decoder);
  s.get("per_lead_heads", m.per_lead_heads);
  s.get("initial_forget_bias", m.initial_forget_bias);
  s.finish();
}

void validate_model(const ModelConfig& m) {
  require(m.hindcast_length >= 1, "model.hindcast_length", "must be >= 1");
  require(m.hidden_size >= 1, "model.hidden_size", "must be >= 1");
  require(m.batch_size >= 1, "model.batch_size", "must be >= 1");
  require(m.ensemble_size >= 1, "model.ensemble_size", "must be >= 1");
  require(m.learning_rate >= 0.0, "model.learning_rate", "must be >= 0");
  require(m.grad_clip_norm > 0.0, "model.grad_clip_norm", "must be > 0");
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, 1, e.what());
  }
  RunConfig c;
  c.source_text = text;
  Section root(j, "");

  std::string data_root, output_root = c.output_root.string();
  root.get("data_root", data_root);
  root.get("output_root", output_root);
  c.data_root = data_root;
  c.output_root = output_root;
  root.get("seed", c.seed);
  root.get("jobs", c.jobs);
  require(c.jobs >= 1, "jobs", "must be >= 1");
  root.get("area_tolerance", c.area_tolerance);
  require(c.area_tolerance > 0.0 && c.area_tolerance < 1.0, "area_tolerance", "must lie in (0,1)");

  if (auto s = root.section("model")) read_model(*s, c.model);
  validate_model(c.model);

  if (auto s = root.section("inputs")) {
    s->get("hindcast_sources", c.inputs.hindcast_sources);
    s->get("forecast_sources", c.inputs.forecast_sources);
    s->get("substitutions", c.inputs.substitutions);
    s->get("statics", c.inputs.statics);
    s->finish();
  }
  require(!c.inputs.hindcast_sources.empty(), "inputs.hindcast_sources", "must name at least one source");

  if (auto s = root.section("periods")) {
    if (const json* t = s->raw("train")) c.train_period = parse_range(*t, "periods.train");
    if (const json* t = s->raw("test")) c.test_period = parse_range(*t, "periods.test");
    s->finish();
  }

  if (auto s = root.section("split")) {
    std::string scheme = to_string(c.split.scheme);
    s->get("scheme", scheme);
    c.split.scheme = parse_scheme(scheme);
    s->get("k", c.split.k);
    std::size_t expected = 0;
    s->get("expected_k", expected);
    if (expected > 0) c.split.expected_k = expected;
    s->get("temporal_folds", c.split.temporal_folds);
    s->get("buffer_days", c.split.buffer_days);
    s->finish();
  }
  require(c.split.buffer_days >= 0, "split.buffer_days", "must be >= 0");
  require(c.split.temporal_folds >= 2, "split.temporal_folds", "must be >= 2");

  if (auto s = root.section("frequency")) {
    s->get("return_periods", c.frequency.return_periods);
    s->get("min_years", c.frequency.min_years);
    std::string method = "pearson3";
    s->get("method", method);
    if (method == "pearson3") {
      c.frequency.method = FrequencyFactorMethod::pearson3;
    } else if (method == "wilson_hilferty") {
      c.frequency.method = FrequencyFactorMethod::wilson_hilferty;
    } else {
      throw ValidationError("config: 'frequency.method' must be pearson3 or wilson_hilferty");
    }
    s->get("year_start_month", c.frequency.year_start_month);
    s->get("min_coverage", c.frequency.min_coverage);
    s->finish();
  }
  require(!c.frequency.return_periods.empty(), "frequency.return_periods", "must not be empty");
  for (double t : c.frequency.return_periods) require(t >= 1.0, "frequency.return_periods", "entries must be >= 1");
  require(c.frequency.year_start_month >= 1 && c.frequency.year_start_month <= 12, "frequency.year_start_month",
          "must be 1..12");
  require(c.frequency.min_coverage > 0.0 && c.frequency.min_coverage <= 1.0, "frequency.min_coverage",
          "must lie in (0,1]");

  if (auto s = root.section("comparison")) {
    std::string grouping = to_string(c.grouping);
    s->get("grouping", grouping);
    c.grouping = parse_grouping(grouping);
    s->get("metric", c.metric);
    s->finish();
  }

  if (auto s = root.section("skill")) {
    s->get("n_trees", c.skill.forest.n_trees);
    s->get("max_depth", c.skill.forest.max_depth);
    s->get("min_samples_leaf", c.skill.forest.min_samples_leaf);
    s->get("max_features", c.skill.forest.max_features);
    s->get("balanced_bootstrap", c.skill.forest.balanced_bootstrap);
    s->get("folds", c.skill.folds);
    s->get("similarity_band", c.skill.similarity_band);
    s->finish();
  }
  require(c.skill.forest.n_trees >= 1, "skill.n_trees", "must be >= 1");
  require(c.skill.forest.min_samples_leaf >= 1, "skill.min_samples_leaf", "must be >= 1");
  require(c.skill.folds >= 2, "skill.folds", "must be >= 2");
  require(c.skill.similarity_band >= 0.0, "skill.similarity_band", "must be >= 0");

  root.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.string());
}

std::string resolved_json(const RunConfig& c) {
  const ModelConfig& m = c.model;
  json j;
  j["data_root"] = c.data_root.string();
  j["output_root"] = c.output_root.string();
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["area_tolerance"] = c.area_tolerance;
  j["model"] = {{"hindcast_length", m.hindcast_length}, {"hidden_size", m.hidden_size},
                {"batch_size", m.batch_size},           {"training_steps", m.training_steps},
                {"learning_rate", m.learning_rate},     {"cosine_decay", m.cosine_decay},
                {"grad_clip_norm", m.grad_clip_norm},   {"validate_every", m.validate_every},
                {"ensemble_size", m.ensemble_size},     {"statics_in_decoder", m.statics_in_decoder},
                {"per_lead_heads", m.per_lead_heads},   {"initial_forget_bias", m.initial_forget_bias}};
  j["inputs"] = {{"hindcast_sources", c.inputs.hindcast_sources},
                 {"forecast_sources", c.inputs.forecast_sources},
                 {"substitutions", c.inputs.substitutions},
                 {"statics", c.inputs.statics}};
  json periods = json::object();
  if (c.train_period) periods["train"] = {c.train_period->first.iso(), c.train_period->last.iso()};
  if (c.test_period) periods["test"] = {c.test_period->first.iso(), c.test_period->last.iso()};
  j["periods"] = periods;
  j["split"] = {{"scheme", to_string(c.split.scheme)},
                {"k", c.split.k},
                {"expected_k", c.split.expected_k.value_or(0)},
                {"temporal_folds", c.split.temporal_folds},
                {"buffer_days", c.split.buffer_days}};
  j["frequency"] = {{"return_periods", c.frequency.return_periods},
                    {"min_years", c.frequency.min_years},
                    {"method", c.frequency.method == FrequencyFactorMethod::pearson3 ? "pearson3" : "wilson_hilferty"},
                    {"year_start_month", c.frequency.year_start_month},
                    {"min_coverage", c.frequency.min_coverage}};
  j["comparison"] = {{"grouping", to_string(c.grouping)}, {"metric", c.metric}};
  j["skill"] = {{"n_trees", c.skill.forest.n_trees},
                {"max_depth", c.skill.forest.max_depth},
                {"min_samples_leaf", c.skill.forest.min_samples_leaf},
                {"max_features", c.skill.forest.max_features},
                {"balanced_bootstrap", c.skill.forest.balanced_bootstrap},
                {"folds", c.skill.folds},
                {"similarity_band", c.skill.similarity_band}};
  return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) { return hex_digest(fnv1a64(resolved_json(config))); }

}  // namespace hydrocast::cli
