#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hydrocast/error.hpp"
#include "hydrocast/flood_frequency.hpp"

using namespace hydrocast;

namespace {

DailySeries years_of(int first_year, int n_years, double value) {
  const Date a = Date::from_ymd(first_year, 1, 1);
  const Date b = Date::from_ymd(first_year + n_years, 1, 1);
  return DailySeries{a, std::vector<double>(static_cast<std::size_t>(b - a), value)};
}

AnnualMaximaSeries maxima_of(std::vector<double> values) {
  AnnualMaximaSeries m;
  for (std::size_t i = 0; i < values.size(); ++i) m.maxima.emplace_back(2000 + static_cast<int>(i), values[i]);
  return m;
}

// Standardized Pearson-III quantile for skew g > 0 by Simpson quadrature of
// the gamma density and bisection; negative skew by reflection.
double pearson3_oracle(double g, double p) {
  if (g < 0) return -pearson3_oracle(-g, 1 - p);
  const double a = 4 / (g * g);
  const double lg = std::lgamma(a);
  auto pdf = [&](double x) { return x <= 0 ? 0.0 : std::exp((a - 1) * std::log(x) - x - lg); };
  auto cdf = [&](double x) {
    const int n = 20000;
    const double h = x / n;
    double s = pdf(0) + pdf(x);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
    return s * h / 3;
  };
  double lo = 0, hi = a + 40 * std::sqrt(a);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  return (0.5 * (lo + hi) - a) / std::sqrt(a);
}

}  // namespace

TEST_CASE("constant series gives one maximum per full year") {
  const auto m = extract_annual_maxima(years_of(2001, 3, 5.0));
  REQUIRE(m.maxima.size() == 3);
  for (const auto& [year, q] : m.maxima) CHECK(q == 5.0);
  CHECK(m.maxima.front().first == 2001);
}

TEST_CASE("years below coverage are omitted") {
  auto s = years_of(2001, 3, 1.0);
  for (std::size_t i = 365; i < 365 + 183; ++i) s.values[i] = std::nan("");  // half of 2002 missing
  const auto m = extract_annual_maxima(s);
  REQUIRE(m.maxima.size() == 2);
  CHECK(m.maxima[0].first == 2001);
  CHECK(m.maxima[1].first == 2003);
  // A record starting in July only covers half of its first year.
  DailySeries late{Date::from_ymd(2001, 7, 1), std::vector<double>(600, 1.0)};
  CHECK(extract_annual_maxima(late).maxima.empty() == false);
  CHECK(extract_annual_maxima(late).maxima.front().first == 2002);
  DailySeries gaps{Date::from_ymd(2001, 1, 1), std::vector<double>(365, std::nan(""))};
  CHECK_THROWS_AS(extract_annual_maxima(gaps), DataError);
}

TEST_CASE("planted per-year peaks are recovered") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  auto s = years_of(1990, 12, 0.0);
  std::vector<double> peaks;
  for (int y = 0; y < 12; ++y) {
    const Date a = Date::from_ymd(1990 + y, 1, 1), b = Date::from_ymd(1991 + y, 1, 1);
    for (Date d = a; d < b; ++d) s.values[static_cast<std::size_t>(d - s.start)] = u(rng);
    const double peak = 2.0 + y;
    s.values[static_cast<std::size_t>(a - s.start) + 37 * static_cast<std::size_t>(y % 9)] = peak;
    peaks.push_back(peak);
  }
  const auto m = extract_annual_maxima(s);
  REQUIRE(m.maxima.size() == 12);
  for (int y = 0; y < 12; ++y) CHECK(m.maxima[static_cast<std::size_t>(y)].second == peaks[static_cast<std::size_t>(y)]);
}

TEST_CASE("hydrological year offset moves the boundary") {
  // Peak on 2001-11-15 belongs to water year 2001 when years start in October.
  DailySeries s{Date::from_ymd(2000, 10, 1), std::vector<double>(730, 1.0)};
  s.values[static_cast<std::size_t>(Date::from_ymd(2001, 11, 15) - s.start)] = 9.0;
  const auto m = extract_annual_maxima(s, YearDefinition{10, 0.8});
  REQUIRE(m.maxima.size() == 2);
  CHECK(m.maxima[0] == std::pair<int, double>{2000, 1.0});
  CHECK(m.maxima[1] == std::pair<int, double>{2001, 9.0});
}

TEST_CASE("moments of a five-year sample match the hand calculation") {
  // log10 of {10, 20, 30, 50, 100} = {1, 1.30103, 1.47712, 1.69897, 2}
  // mean = 7.4771213 / 5 = 1.4954243
  // sum of squared deviations = 0.5795969, s = sqrt(0.5795969 / 4) = 0.3806563
  // sum of cubed deviations = 0.0079448
  // skew = 5 * 0.0079448 / (4 * 3 * 0.3806563^3) = 0.0600166
  const auto m = fit_lp3(maxima_of({10, 20, 30, 50, 100}), 5);
  CHECK(m.n == 5);
  CHECK(m.mean == doctest::Approx(1.4954242509439326).epsilon(1e-12));
  CHECK(m.std == doctest::Approx(0.38065629997395045).epsilon(1e-12));
  CHECK(m.skew == doctest::Approx(0.060016571951179126).epsilon(1e-10));
}

TEST_CASE("fit errors") {
  CHECK_THROWS_WITH_AS(fit_lp3(maxima_of(std::vector<double>(12, 10.0))), doctest::Contains("degenerate: zero variance"),
                       NumericError);
  CHECK_THROWS_WITH_AS(fit_lp3(maxima_of({1, 2, 3, 4, 5})), doctest::Contains("sample too small"), DataError);
  std::vector<double> with_zero{1, 2, 3, 4, 5, 6, 7, 8, 9, 0};
  CHECK_THROWS_WITH_AS(fit_lp3(maxima_of(with_zero)), doctest::Contains("non-positive"), DataError);
}

TEST_CASE("lognormal sample has near-zero fitted skew") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(1.0, 0.3);
  std::vector<double> v(10000);
  for (auto& x : v) x = std::pow(10.0, n(rng));
  const auto m = fit_lp3(maxima_of(v));
  CHECK(std::abs(m.skew) <= 0.05);
  CHECK(m.mean == doctest::Approx(1.0).epsilon(0.01));
  CHECK(m.std == doctest::Approx(0.3).epsilon(0.02));
}

TEST_CASE("zero skew reduces to lognormal quantiles") {
  const Lp3Moments m{0.8, 0.25, 0.0, 30};
  CHECK(threshold(m, 2.0) == doctest::Approx(std::pow(10.0, 0.8)).epsilon(1e-15));
  for (double T : {1.0, 2.0, 5.0, 10.0, 100.0}) {
    const double z = standard_normal_quantile(non_exceedance(T));
    const double expected = std::pow(10.0, 0.8 + z * 0.25);
    CHECK(std::abs(threshold(m, T) - expected) <= 1e-12 * expected);
    CHECK(std::abs(threshold(m, T, FrequencyFactorMethod::wilson_hilferty) - expected) <= 1e-12 * expected);
  }
  CHECK(frequency_factor(5e-7, 10.0) == doctest::Approx(standard_normal_quantile(0.9)).epsilon(1e-15));
}

TEST_CASE("one-year return period is evaluated at 1.01") {
  CHECK(non_exceedance(1.0) == doctest::Approx(1.0 - 1.0 / 1.01).epsilon(1e-15));
  CHECK_THROWS_AS(non_exceedance(0.5), ValidationError);
}

TEST_CASE("frequency factor matches the Pearson-III quadrature oracle") {
  CHECK(frequency_factor(0.5, 10.0) == doctest::Approx(pearson3_oracle(0.5, 0.9)).epsilon(1e-9).scale(1.0));
  for (double g : {-1.0, -0.4, 0.3, 1.0}) {
    for (double T : {2.0, 10.0, 100.0}) {
      const double p = 1 - 1 / T;
      CHECK(pearson3_factor(g, p) == doctest::Approx(pearson3_oracle(g, p)).epsilon(1e-8).scale(1.0));
    }
  }
}

TEST_CASE("Wilson-Hilferty stays near the exact factor at moderate skew") {
  const double wh = frequency_factor(0.5, 10.0, FrequencyFactorMethod::wilson_hilferty);
  CHECK(std::abs(wh - pearson3_oracle(0.5, 0.9)) < 2e-3);
}

TEST_CASE("thresholds increase with T and scale with the flow") {
  std::mt19937_64 rng(9);
  std::gamma_distribution<double> gam(2.0, 3.0);
  auto s = years_of(1980, 30, 0.0);
  for (auto& v : s.values) v = gam(rng);
  const FrequencyInput in{"g1", "observed", s};
  const FrequencyInput scaled{"g1", "scaled", s.scaled(3.7)};
  const std::vector<FrequencyInput> inputs{in, scaled};
  const auto tables = build_tables(inputs);
  REQUIRE(tables.tables.size() == 2);
  const auto& a = tables.tables[0];
  const auto& b = tables.tables[1];
  double prev = 0;
  for (const auto& [T, q] : a.thresholds) {
    CHECK(q > prev);
    prev = q;
    CHECK(b.thresholds.at(T) == doctest::Approx(3.7 * q).epsilon(1e-9));
  }
  CHECK(a.thresholds.at(10.0) > a.thresholds.at(2.0));
}

TEST_CASE("short records and zero maxima go to the skip report") {
  auto short_series = years_of(2000, 5, 1.0);
  short_series.values[40] = 3.0;
  auto zeros = years_of(1990, 12, 0.0);
  for (std::size_t i = 0; i < zeros.values.size(); i += 400) zeros.values[i] = 2.0;
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> e(1.0);
  auto good = years_of(1990, 15, 0.0);
  for (auto& v : good.values) v = e(rng);
  const std::vector<FrequencyInput> inputs{{"short", "observed", short_series},
                                           {"zeros", "observed", zeros},
                                           {"good", "observed", good}};
  const auto t = build_tables(inputs);
  REQUIRE(t.tables.size() == 1);
  CHECK(t.tables[0].gauge_id == "good");
  REQUIRE(t.skipped.size() == 2);
  CHECK(t.skipped[0].gauge_id == "short");
  CHECK(t.skipped[0].reason.find("sample too small") != std::string::npos);
  CHECK(t.skipped[1].reason.find("non-positive") != std::string::npos);
  CHECK(skip_report_json(t.skipped).find("\"short\"") != std::string::npos);
}

TEST_CASE("biased model series get their own thresholds") {
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> ln(0.0, 0.8);
  auto obs = years_of(1985, 25, 0.0);
  for (auto& v : obs.values) v = ln(rng);
  const std::vector<FrequencyInput> inputs{{"g", "observed", obs}, {"g", "model", obs.scaled(0.6)}};
  const auto t = build_tables(inputs);
  REQUIRE(t.tables.size() == 2);
  const auto* o = t.find("g", "observed");
  const auto* m = t.find("g", "model");
  REQUIRE(o != nullptr);
  REQUIRE(m != nullptr);
  for (double T : kDefaultReturnPeriods) CHECK(m->thresholds.at(T) == doctest::Approx(0.6 * o->thresholds.at(T)));
}
