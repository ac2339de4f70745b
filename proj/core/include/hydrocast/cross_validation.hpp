#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hydrocast/calendar.hpp"

namespace hydrocast {

struct BasinRecord;

enum class SplitScheme { random, continent, climate, terminal_basin };
SplitScheme parse_scheme(const std::string& s);
std::string to_string(SplitScheme s);

struct GaugeLabels {
  std::string gauge_id;
  std::string continent;
  std::string climate_zone;
  std::string terminal_basin_id;
};

GaugeLabels labels_of(const BasinRecord& record);

// Seeded shuffle then chunking; the N mod k leftover gauges go one each to
// the leading folds.
std::vector<std::vector<std::string>> random_spatial_folds(std::span<const std::string> gauges, std::size_t k,
                                                           std::uint64_t seed);

// One fold per distinct label (sorted by label). Throws ValidationError
// listing unlabeled gauges, or when `expected_k` is given and differs.
std::vector<std::vector<std::string>> grouped_folds(std::span<const GaugeLabels> gauges, SplitScheme scheme,
                                                    std::optional<std::size_t> expected_k = std::nullopt);

inline constexpr std::int32_t kDefaultBufferDays = 365;

struct TemporalFold {
  DateRange test;
  std::vector<DateRange> train;  // period minus [test.first - buffer, test.last + buffer]
};

// Training excludes every day within `buffer_days` of the test window, so
// train days and test days are always more than `buffer_days` apart.
TemporalFold temporal_split(const DateRange& period, const DateRange& test_window,
                            std::int32_t buffer_days = kDefaultBufferDays);

// `n` contiguous test windows covering the period. Throws ValidationError
// naming the minimum feasible span when some fold would have no training day.
std::vector<TemporalFold> temporal_folds(const DateRange& period, std::size_t n,
                                         std::int32_t buffer_days = kDefaultBufferDays);

struct Fold {
  int fold_id = 0;
  int spatial_fold = 0;
  int temporal_fold = 0;
  std::vector<std::string> test_gauges;
  std::vector<std::string> train_gauges;
  std::vector<DateRange> test_ranges;
  std::vector<DateRange> train_ranges;

  bool operator==(const Fold&) const = default;
};

struct SplitPlan {
  SplitScheme scheme = SplitScheme::random;
  std::uint64_t seed = 0;
  std::int32_t buffer_days = kDefaultBufferDays;
  DateRange period{};
  std::string pairing = "cross_product";
  std::vector<Fold> folds;

  bool operator==(const SplitPlan&) const = default;
};

struct SplitOptions {
  SplitScheme scheme = SplitScheme::random;
  std::size_t k = 10;                        // random scheme only
  std::optional<std::size_t> expected_k;     // grouped schemes
  std::uint64_t seed = 0;
  DateRange period{};
  std::size_t temporal_folds = 2;
  std::int32_t buffer_days = kDefaultBufferDays;
};

// Full cross-product of spatial folds with temporal folds.
SplitPlan make_split_plan(std::span<const GaugeLabels> gauges, const SplitOptions& options);

std::string split_plan_json(const SplitPlan& plan);
SplitPlan parse_split_plan(const std::string& text);
SplitPlan read_split_plan(const std::filesystem::path& path);

}  // namespace hydrocast
