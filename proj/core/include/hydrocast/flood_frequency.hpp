#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hydrocast/series.hpp"

namespace hydrocast {

struct YearDefinition {
  unsigned start_month = 1;    // first month of the hydrological year
  double min_coverage = 0.80;  // fraction of days present for a year to count
};

struct AnnualMaximaSeries {
  std::string gauge_id;
  std::string source;  // "observed" or a model name
  std::vector<std::pair<int, double>> maxima;  // (hydrological year, max daily flow)
};

// Throws DataError when no year reaches the coverage fraction.
AnnualMaximaSeries extract_annual_maxima(const DailySeries& series, const YearDefinition& years = {},
                                         std::string gauge_id = {}, std::string source = {});

// Moments of log10 annual maxima. `skew` is the bias-corrected station skew
// n * sum((x - mean)^3) / ((n - 1)(n - 2) s^3).
struct Lp3Moments {
  double mean = 0.0;
  double std = 0.0;
  double skew = 0.0;
  std::size_t n = 0;
};

inline constexpr std::size_t kDefaultMinYears = 10;
// The nominal "1-year" event is evaluated at T = 1.01.
inline constexpr double kOneYearReturnPeriod = 1.01;

Lp3Moments fit_lp3(const AnnualMaximaSeries& maxima, std::size_t min_years = kDefaultMinYears);

enum class FrequencyFactorMethod {
  pearson3,        // exact Pearson-III quantile via the inverse incomplete gamma function
  wilson_hilferty  // (2/g)[(1 + g z/6 - g^2/36)^3 - 1]
};

// Non-exceedance probability 1 - 1/T, with T = 1 mapped to 1.01.
double non_exceedance(double return_period);
double standard_normal_quantile(double p);
double wilson_hilferty_factor(double skew, double z);
double pearson3_factor(double skew, double p);
double frequency_factor(double skew, double return_period,
                        FrequencyFactorMethod method = FrequencyFactorMethod::pearson3);
// 10^(mean + K std).
double threshold(const Lp3Moments& moments, double return_period,
                 FrequencyFactorMethod method = FrequencyFactorMethod::pearson3);

struct ReturnPeriodTable {
  std::string gauge_id;
  std::string source;
  std::map<double, double> thresholds;  // nominal T -> flow
  Lp3Moments moments;
};

struct SkipEntry {
  std::string gauge_id;
  std::string source;
  std::string reason;
};

struct FrequencyInput {
  std::string gauge_id;
  std::string source;
  DailySeries series;
};

struct FrequencyOptions {
  YearDefinition years;
  std::size_t min_years = kDefaultMinYears;
  FrequencyFactorMethod method = FrequencyFactorMethod::pearson3;
};

struct ReturnPeriodTables {
  std::vector<ReturnPeriodTable> tables;
  std::vector<SkipEntry> skipped;

  const ReturnPeriodTable* find(const std::string& gauge, const std::string& source) const;
};

inline const std::vector<double> kDefaultReturnPeriods{1.0, 2.0, 5.0, 10.0};

// One table per input; per-gauge failures land in `skipped`, never abort.
ReturnPeriodTables build_tables(std::span<const FrequencyInput> inputs,
                                std::span<const double> return_periods = kDefaultReturnPeriods,
                                const FrequencyOptions& options = {});

// return_periods.csv: gauge_id,source,T,threshold,n_years,mean_log,std_log,skew_log
std::string return_periods_csv(const ReturnPeriodTables& tables);
ReturnPeriodTables read_return_periods(const std::filesystem::path& path);
std::string skip_report_json(std::span<const SkipEntry> skipped);

}  // namespace hydrocast
