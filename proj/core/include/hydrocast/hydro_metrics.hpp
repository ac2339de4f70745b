#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hydrocast {

// nullopt means UNDEFINED (zero variance or zero mean in the observations).
struct HydroMetrics {
  std::size_t n = 0;  // paired days used
  std::optional<double> nse;
  std::optional<double> log_nse;
  std::optional<double> alpha_nse;
  std::optional<double> beta_nse;
  std::optional<double> kge;
  std::optional<double> log_kge;
  std::optional<double> beta_kge;
};

// Log epsilon as a fraction of mean observed flow.
inline constexpr double kLogEpsilonFraction = 0.01;

// Days where either value is NaN are dropped. Standard deviations use the
// population (ddof 0) form; logs are ln(max(x, 0) + eps).
HydroMetrics hydrograph_metrics(std::span<const double> sim, std::span<const double> obs);

inline const std::vector<std::string> kHydroMetricNames{"nse",      "log_nse", "alpha_nse", "beta_nse",
                                                        "kge",      "log_kge", "beta_kge"};
std::optional<double> metric_by_name(const HydroMetrics& m, const std::string& name);

struct HydroMetricsRow {
  std::string gauge_id;
  std::string model;
  int lead_days = 0;
  HydroMetrics metrics;
};

// hydro_metrics.csv: gauge_id,model,lead,n,<metrics...>
std::string hydro_metrics_csv(std::span<const HydroMetricsRow> rows);

}  // namespace hydrocast
