#include "hydrocast/run_context.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>

#include "hydrocast/checkpoint.hpp"
#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"
#include "json.hpp"

namespace hydrocast::cli {

namespace fs = std::filesystem;
using nlohmann::json;

RunContext::RunContext(std::string command, RunConfig config, fs::path out_dir, std::vector<std::string> argv)
    : command_(std::move(command)), config_(std::move(config)), out_(std::move(out_dir)), argv_(std::move(argv)) {
  if (out_.empty()) out_ = config_.output_root / command_;
  fs::create_directories(out_);
}

void RunContext::write(const std::string& name, const std::string& text) {
  csv::write_text(out_ / name, text);
  outputs_.push_back(name);
}

void RunContext::write_skips(const std::vector<SkipEntry>& skipped) { write("skip_report.json", skip_report_json(skipped)); }

void RunContext::finish() {
  // Verbatim echo when a file was given; otherwise the defaults that ran.
  const std::string echo = config_.source_text.empty() ? resolved_json(config_) : config_.source_text;
  csv::write_text(out_ / "run_config.json", echo);

  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  json manifest = {
      {"tool", "hydrocast"},
      {"version", HYDROCAST_VERSION},
      {"command", command_},
      {"argv", argv_},
      {"seed", config_.seed},
      {"config_hash", config_hash(config_)},
      {"resolved_config", json::parse(resolved_json(config_))},
      {"outputs", outputs_},
      {"formats", {{"checkpoint", kCheckpointVersion}, {"split_plan", 1}, {"forest", 1}}},
      {"created_at", stamp},
  };
  csv::write_text(out_ / "manifest.json", manifest.dump(2) + "\n");
}

fs::path data_root(const RunConfig& config) {
  if (const char* env = std::getenv(kDataRootEnv); env != nullptr && *env != '\0') return env;
  if (config.data_root.empty()) {
    throw ValidationError(std::string("no data root: set 'data_root' in the config or ") + kDataRootEnv);
  }
  return config.data_root;
}

Dataset load_filtered(const RunConfig& config, std::vector<SkipEntry>* skipped) {
  Dataset ds = load_dataset(data_root(config));
  if (ds.basins.empty()) throw DataError("no basins under " + data_root(config).string());
  std::vector<std::string> dropped;
  ds.basins = filter_gauges(std::move(ds.basins), config.area_tolerance, &dropped);
  if (skipped != nullptr) {
    for (const auto& g : dropped) skipped->push_back({g, "observed", "drainage area mismatch beyond tolerance"});
  }
  return ds;
}

std::pair<std::string, fs::path> named_path(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  if (eq == 0 || eq + 1 == spec.size()) throw ValidationError("expected name=path, got '" + spec + "'");
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

std::string error_json(const std::string& code, const std::string& message, const std::string& command) {
  return json{{"error", {{"code", code}, {"message", message}, {"command", command}}}}.dump() + "\n";
}

}  // namespace hydrocast::cli
