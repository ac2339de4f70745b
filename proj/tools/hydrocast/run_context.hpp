#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hydrocast/basin.hpp"
#include "hydrocast/flood_frequency.hpp"
#include "hydrocast/run_config.hpp"

namespace hydrocast::cli {

inline constexpr const char* kDataRootEnv = "HYDROCAST_DATA_ROOT";

// One command invocation: resolved config plus the output directory it owns.
class RunContext {
 public:
  RunContext(std::string command, RunConfig config, std::filesystem::path out_dir, std::vector<std::string> argv);

  const RunConfig& config() const { return config_; }
  const std::filesystem::path& out() const { return out_; }
  const std::string& command() const { return command_; }

  // Writes a file under the output directory and records it for the manifest.
  void write(const std::string& name, const std::string& text);
  void write_skips(const std::vector<SkipEntry>& skipped);
  // run_config.json (verbatim) and manifest.json; call last.
  void finish();

 private:
  std::string command_;
  RunConfig config_;
  std::filesystem::path out_;
  std::vector<std::string> argv_;
  std::vector<std::string> outputs_;
};

// Data root: the environment variable wins over the config.
std::filesystem::path data_root(const RunConfig& config);
// Loads, conforms and area-filters the dataset; filtered gauges are reported.
Dataset load_filtered(const RunConfig& config, std::vector<SkipEntry>* skipped);

// "name=path" or a bare path, which takes the file stem as the name.
std::pair<std::string, std::filesystem::path> named_path(const std::string& spec);

std::string error_json(const std::string& code, const std::string& message, const std::string& command);

}  // namespace hydrocast::cli
