#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hydrocast/run_config.hpp"
#include "hydrocast/synthetic.hpp"

namespace hydrocast::cli {

struct CommonArgs {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::filesystem::path out;
  std::vector<std::string> argv;
};

// Config file (or defaults) with --seed / --jobs applied.
RunConfig resolve_config(const CommonArgs& args);

struct SynthArgs {
  CommonArgs common;
  SyntheticOptions options;
};

struct TrainArgs {
  CommonArgs common;
  std::filesystem::path plan;
  std::optional<std::size_t> fold;
};

struct ForecastArgs {
  CommonArgs common;
  std::filesystem::path models;
  std::filesystem::path plan;
  std::optional<std::size_t> fold;
};

struct ReturnPeriodArgs {
  CommonArgs common;
  std::vector<std::string> predictions;  // name=path
};

struct EventArgs {
  CommonArgs common;
  std::vector<std::string> predictions;
  std::filesystem::path thresholds;
};

struct HydroArgs {
  CommonArgs common;
  std::vector<std::string> predictions;
};

struct CompareArgs {
  CommonArgs common;
  std::filesystem::path scores;
  std::string a;
  std::string b;
  std::optional<std::string> metric;
  std::optional<std::string> grouping;
  std::optional<double> return_period;
  std::optional<int> lead;
  std::optional<int> lead_a;
  std::optional<int> lead_b;
};

struct SplitArgs {
  CommonArgs common;
  std::optional<std::string> scheme;
  std::optional<std::size_t> k;
  std::optional<std::size_t> temporal_folds;
  std::optional<std::int32_t> buffer_days;
};

struct SkillFitArgs {
  CommonArgs common;
  std::filesystem::path scores;
  std::string task = "above-mean";  // above-mean | which-model | regression
  std::string a;
  std::string b;
  std::optional<std::string> metric;
  double return_period = 2.0;
  int lead = 0;
};

struct SkillPredictArgs {
  CommonArgs common;
  std::filesystem::path model;
};

struct ReportArgs {
  CommonArgs common;
  std::filesystem::path scores;
  std::vector<std::string> metrics{"precision", "recall", "f1"};
};

void run_synth(const SynthArgs& args);
void run_train(const TrainArgs& args);
void run_forecast(const ForecastArgs& args);
void run_return_periods(const ReturnPeriodArgs& args);
void run_eval_events(const EventArgs& args);
void run_eval_hydro(const HydroArgs& args);
void run_compare(const CompareArgs& args);
void run_cv_split(const SplitArgs& args);
void run_skill_fit(const SkillFitArgs& args);
void run_skill_predict(const SkillPredictArgs& args);
void run_report(const ReportArgs& args);

}  // namespace hydrocast::cli
