#include "hydrocast/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"
#include "json.hpp"

namespace hydrocast {

using nlohmann::json;

namespace {

json config_json(const ModelConfig& c) {
  return {{"hindcast_length", c.hindcast_length},
          {"horizon", ModelConfig::kHorizon},
          {"hidden_size", c.hidden_size},
          {"batch_size", c.batch_size},
          {"training_steps", c.training_steps},
          {"learning_rate", c.learning_rate},
          {"cosine_decay", c.cosine_decay},
          {"grad_clip_norm", c.grad_clip_norm},
          {"validate_every", c.validate_every},
          {"ensemble_size", c.ensemble_size},
          {"statics_in_decoder", c.statics_in_decoder},
          {"per_lead_heads", c.per_lead_heads},
          {"initial_forget_bias", c.initial_forget_bias},
          {"hindcast_dynamic", c.hindcast_dynamic},
          {"forecast_dynamic", c.forecast_dynamic},
          {"static_inputs", c.static_inputs}};
}

ModelConfig config_from(const json& j) {
  ModelConfig c;
  c.hindcast_length = j.at("hindcast_length").get<std::size_t>();
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.training_steps = j.at("training_steps").get<std::size_t>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.cosine_decay = j.at("cosine_decay").get<bool>();
  c.grad_clip_norm = j.at("grad_clip_norm").get<double>();
  c.validate_every = j.at("validate_every").get<std::size_t>();
  c.ensemble_size = j.at("ensemble_size").get<std::size_t>();
  c.statics_in_decoder = j.at("statics_in_decoder").get<bool>();
  c.per_lead_heads = j.at("per_lead_heads").get<bool>();
  c.initial_forget_bias = j.at("initial_forget_bias").get<double>();
  c.hindcast_dynamic = j.at("hindcast_dynamic").get<std::size_t>();
  c.forecast_dynamic = j.at("forecast_dynamic").get<std::size_t>();
  c.static_inputs = j.at("static_inputs").get<std::size_t>();
  if (j.at("horizon").get<std::size_t>() != ModelConfig::kHorizon) {
    throw ValidationError("checkpoint horizon does not match this build");
  }
  return c;
}

json transform_json(const FeatureTransform& t) {
  json stats = json::object();
  for (const auto& [name, s] : t.stats) stats[name] = {s.mean, s.std};
  return {{"hindcast_features", t.schema.hindcast_features},
          {"forecast_features", t.schema.forecast_features},
          {"static_features", t.schema.static_features},
          {"substitutions", t.schema.substitutions},
          {"stats", stats},
          {"dropped", t.dropped}};
}

FeatureTransform transform_from(const json& j) {
  FeatureTransform t;
  t.schema.hindcast_features = j.at("hindcast_features").get<std::vector<std::string>>();
  t.schema.forecast_features = j.at("forecast_features").get<std::vector<std::string>>();
  t.schema.static_features = j.at("static_features").get<std::vector<std::string>>();
  t.schema.substitutions = j.at("substitutions").get<std::map<std::string, std::vector<std::string>>>();
  for (const auto& [name, v] : j.at("stats").items()) t.stats[name] = FeatureStats{v.at(0).get<double>(), v.at(1).get<double>()};
  t.dropped = j.at("dropped").get<std::vector<std::string>>();
  return t;
}

}  // namespace

std::string checkpoint_json(const TrainedModel& model) {
  json params = json::object();
  for (const auto& [name, t] : model.state.named()) {
    std::vector<std::size_t> dims;
    for (std::size_t i = 0; i < t->shape.rank(); ++i) dims.push_back(t->shape[i]);
    params[name] = {{"shape", dims}, {"values", t->values}};
  }
  json j = {{"format", "hydrocast.checkpoint"},
            {"version", kCheckpointVersion},
            {"seed", model.seed},
            {"config", config_json(model.config)},
            {"transform", transform_json(model.transform)},
            {"parameters", params}};
  return j.dump() + "\n";
}

TrainedModel parse_checkpoint(const std::string& text, const std::string& source) {
  try {
    const json j = json::parse(text);
    if (j.at("format") != "hydrocast.checkpoint") throw ParseError(source, 1, "not a hydrocast checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw ParseError(source, 1, "unsupported checkpoint version " + j.at("version").dump());
    }
    TrainedModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = config_from(j.at("config"));
    m.transform = transform_from(j.at("transform"));
    m.state = ForecastModelState::zeros(m.config);
    for (auto& [name, t] : m.state.named()) {
      const json& p = j.at("parameters").at(name);
      auto values = p.at("values").get<std::vector<double>>();
      const auto dims = p.at("shape").get<std::vector<std::size_t>>();
      std::vector<std::size_t> expect;
      for (std::size_t i = 0; i < t->shape.rank(); ++i) expect.push_back(t->shape[i]);
      if (dims != expect || values.size() != t->values.size()) {
        throw ParseError(source, 1, "parameter '" + name + "' has wrong shape");
      }
      t->values = std::move(values);
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(source, 1, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path) {
  csv::write_text(path, checkpoint_json(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str(), path.string());
}

}  // namespace hydrocast
