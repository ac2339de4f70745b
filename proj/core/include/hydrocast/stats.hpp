#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hydrocast {

enum class WilcoxonMethod { automatic, exact, normal };

struct WilcoxonResult {
  double p_value = 1.0;
  double w_plus = 0.0;        // sum of positive ranks
  std::size_t n_nonzero = 0;  // differences entering the test
  bool exact = false;
  bool degenerate = false;    // every difference was zero
};

inline constexpr std::size_t kWilcoxonExactMax = 25;

// Two-sided signed-rank test on paired differences. Zero differences are
// dropped; ties get mid-ranks. Exact null for n <= 25 under `automatic`,
// otherwise normal with tie and continuity corrections.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs,
                                    WilcoxonMethod method = WilcoxonMethod::automatic);

struct EffectSize {
  std::optional<double> d;
  bool degenerate = false;  // zero spread in the differences
};

inline constexpr double kDegenerateSpread = 1e-12;  // relative to max |diff|

// mean(diff) / sd(diff, n-1); needs at least two differences. Degenerate when
// sd(diff) <= kDegenerateSpread * max |diff|.
EffectSize cohens_d(std::span<const double> diffs);

inline constexpr double kTieBand = 1e-9;

enum class Grouping { all, continent, return_period, lead };
Grouping parse_grouping(const std::string& s);
std::string to_string(Grouping g);

// One score of one model; `value` is nullopt when UNDEFINED.
struct GaugeScore {
  std::string gauge_id;
  std::string continent;
  double return_period = 0.0;
  int lead_days = 0;
  std::optional<double> value;
};

struct PairedComparison {
  std::string metric;
  std::string group;
  std::size_t n = 0;
  double fraction_better = 0.0;    // A > B beyond the tie band
  double fraction_at_least = 0.0;  // A >= B within the tie band
  WilcoxonResult wilcoxon;
  EffectSize effect;
  std::vector<double> a;
  std::vector<double> b;
};

struct ComparisonSet {
  std::string metric;
  Grouping grouping = Grouping::all;
  std::vector<PairedComparison> groups;
  std::vector<std::string> notes;  // omitted groups and unmatched keys
};

// Pairs scores by (gauge, T, lead); only pairs with both sides defined count.
// Differences are A - B, so larger-is-better metrics give positive d when A wins.
ComparisonSet compare_models(std::span<const GaugeScore> a, std::span<const GaugeScore> b, const std::string& metric,
                             Grouping grouping);

struct BoxStats {
  std::size_t n = 0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

// Linear-interpolated quantile (Hyndman-Fan type 7) of sorted data.
double quantile_sorted(std::span<const double> sorted, double q);
// Whiskers reach the most extreme points within 1.5 IQR of the box.
BoxStats box_stats(std::span<const double> values);

std::string comparison_json(std::span<const ComparisonSet> sets);

}  // namespace hydrocast
