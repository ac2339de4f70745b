#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hydrocast/basin.hpp"
#include "hydrocast/checkpoint.hpp"
#include "hydrocast/matrix.hpp"
#include "hydrocast/series.hpp"

namespace hydrocast {

struct EnsembleForecast {
  std::string gauge_id;
  std::vector<Date> issue_dates;
  std::vector<Matrix> member_medians;  // per member, [issue x 8] in mm/day
  Matrix mean;                         // elementwise mean of member medians

  std::size_t members() const { return member_medians.size(); }
};

// Issue dates of a record with a full hindcast window and forecast rows
// through lead 7.
std::vector<Date> valid_issue_dates(const BasinRecord& record, const ModelConfig& config);

// Median hydrograph of one member, de-standardized to mm/day; [issue x 8].
Matrix predict_medians(const TrainedModel& model, const BasinRecord& record, std::span<const Date> issue_dates);

EnsembleForecast combine_members(std::string gauge_id, std::vector<Date> issue_dates, std::vector<Matrix> medians);

// Throws ValidationError when members.size() != expected_members.
EnsembleForecast predict_ensemble(std::span<const TrainedModel> members, const BasinRecord& record,
                                  std::span<const Date> issue_dates, std::size_t expected_members);

// ---- prediction archive: gauge_id,issue_date,lead_days,q_pred_mmday

struct PredictionArchive {
  // gauge -> lead -> (issue date -> value)
  std::map<std::string, std::map<int, std::map<Date, double>>> values;

  void add(const std::string& gauge, Date issue, int lead, double q);
  void add(const EnsembleForecast& f);
  std::vector<std::string> gauges() const;
  // Hydrograph at a lead indexed by valid date (issue + lead); gaps are NaN.
  DailySeries lead_series(const std::string& gauge, int lead) const;
  bool has(const std::string& gauge) const { return values.count(gauge) > 0; }
};

std::string predictions_csv(const PredictionArchive& archive);
void write_predictions(const PredictionArchive& archive, const std::filesystem::path& path);
PredictionArchive read_predictions(const std::filesystem::path& path);

}  // namespace hydrocast
