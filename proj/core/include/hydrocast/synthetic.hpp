#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hydrocast/basin.hpp"
#include "hydrocast/calendar.hpp"

namespace hydrocast {

// Linear-reservoir basins driven by stochastic rainfall. Each basin has a
// recession constant k and a runoff coefficient c, both exposed as static
// attributes; storage follows S_t = (1 - k) S_{t-1} + c_t P_t and Q_t = k S_t,
// with c_t reduced in the warm season.
//
// Sources: "era5l" (precip, temp) over the whole record and "hres" (precip)
// as a noisy forecast of the same day's rainfall, missing before
// `forecast_start_year`.
struct SyntheticOptions {
  std::size_t basins = 20;
  int years = 5;
  int start_year = 2000;
  int forecast_start_year = 0;  // 0: hres available from start_year + 1
  std::uint64_t seed = 1;
  double missing_discharge = 0.02;   // fraction of discharge days dropped
  double noise = 0.03;               // multiplicative observation noise (sd)
  double forecast_noise = 0.15;      // multiplicative hres noise (sd)
  std::size_t area_outliers = 0;     // basins whose polygon area is off by 50%
};

struct SyntheticBasinTruth {
  std::string gauge_id;
  double recession = 0.0;
  double runoff_coefficient = 0.0;
  std::vector<double> clean_discharge;  // before noise and gaps
};

struct SyntheticDataset {
  Dataset dataset;
  std::vector<SyntheticBasinTruth> truth;
};

SyntheticDataset make_synthetic_dataset(const SyntheticOptions& options = {});
void write_dataset(const Dataset& dataset, const std::filesystem::path& root);

inline const std::vector<std::string> kSyntheticContinents{"africa", "asia", "europe",
                                                           "north_america", "oceania", "south_america"};

}  // namespace hydrocast
