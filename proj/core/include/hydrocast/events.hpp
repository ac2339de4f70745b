#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hydrocast/calendar.hpp"
#include "hydrocast/series.hpp"

namespace hydrocast {

// Upward threshold crossings of a daily series.
struct EventList {
  std::string gauge_id;
  std::string source;
  double return_period = 0.0;
  std::vector<Date> dates;
  bool starts_above = false;       // first event sits at the record start, crossing unobserved
  std::size_t missing_days = 0;    // treated as below threshold
};

// Indices i with x[i] >= thr and (i == 0 or x[i-1] < thr); NaN counts as below.
std::vector<std::size_t> crossing_indices(std::span<const double> flow, double threshold);

EventList extract_events(const DailySeries& flow, double threshold, std::string gauge_id = {},
                         std::string source = {}, double return_period = 0.0);

struct MatchCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  bool operator==(const MatchCounts&) const = default;
};

inline constexpr std::int32_t kMatchWindowDays = 2;

// Maximum one-to-one matching of sorted day lists with |d_pred - d_obs| <= window.
MatchCounts match_events(std::span<const std::int32_t> predicted, std::span<const std::int32_t> observed,
                         std::int32_t window = kMatchWindowDays);
MatchCounts match_events(const EventList& predicted, const EventList& observed,
                         std::int32_t window = kMatchWindowDays);

// nullopt is the UNDEFINED state.
struct Prf1 {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

Prf1 prf1(std::size_t tp, std::size_t fp, std::size_t fn);
inline Prf1 prf1(const MatchCounts& c) { return prf1(c.tp, c.fp, c.fn); }

struct EventScore {
  std::string gauge_id;
  std::string model;
  double return_period = 0.0;
  int lead_days = 0;
  MatchCounts counts;
  Prf1 scores;
  bool starts_above = false;
  std::size_t missing_days = 0;
};

// Scores one (gauge, model, T, lead) from observed and simulated series on
// the days both cover; each series uses its own threshold.
EventScore score_events(const DailySeries& observed, const DailySeries& simulated, double observed_threshold,
                        double simulated_threshold, std::int32_t window = kMatchWindowDays);

// event_scores.csv: gauge_id,model,T,lead,TP,FP,FN,precision,recall,f1
std::string event_scores_csv(std::span<const EventScore> scores);
std::vector<EventScore> read_event_scores(const std::filesystem::path& path);

}  // namespace hydrocast
