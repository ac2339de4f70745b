#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hydrocast/calendar.hpp"
#include "hydrocast/cross_validation.hpp"
#include "hydrocast/flood_frequency.hpp"
#include "hydrocast/forest.hpp"
#include "hydrocast/model.hpp"
#include "hydrocast/stats.hpp"

namespace hydrocast::cli {

struct InputsConfig {
  std::vector<std::string> hindcast_sources{"era5l"};
  std::vector<std::string> forecast_sources{"hres"};
  std::map<std::string, std::vector<std::string>> substitutions;
  std::vector<std::string> statics;  // empty: every attribute
};

struct SplitConfig {
  SplitScheme scheme = SplitScheme::random;
  std::size_t k = 10;
  std::optional<std::size_t> expected_k;
  std::size_t temporal_folds = 2;
  std::int32_t buffer_days = kDefaultBufferDays;
};

struct FrequencyConfig {
  std::vector<double> return_periods = kDefaultReturnPeriods;
  std::size_t min_years = kDefaultMinYears;
  FrequencyFactorMethod method = FrequencyFactorMethod::pearson3;
  unsigned year_start_month = 1;
  double min_coverage = 0.8;
};

struct SkillConfig {
  ForestConfig forest;
  std::size_t folds = 5;
  double similarity_band = 0.05;
};

// Everything a command needs besides its own flags. Loaded from JSON; every
// key is optional, unknown keys are rejected.
struct RunConfig {
  std::filesystem::path data_root;
  std::filesystem::path output_root = "runs";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  ModelConfig model = ModelConfig::desk_scale();
  InputsConfig inputs;
  double area_tolerance = 0.20;
  std::optional<DateRange> train_period;
  std::optional<DateRange> test_period;
  SplitConfig split;
  FrequencyConfig frequency;
  Grouping grouping = Grouping::all;
  std::string metric = "f1";
  SkillConfig skill;

  std::string source_text;  // the config file as read, echoed into outputs
};

RunConfig parse_run_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);
// Fully resolved configuration, including defaults.
std::string resolved_json(const RunConfig& config);
std::string config_hash(const RunConfig& config);

}  // namespace hydrocast::cli
