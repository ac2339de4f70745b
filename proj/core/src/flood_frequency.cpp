#include "hydrocast/flood_frequency.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <sstream>

#include "hydrocast/basin.hpp"
#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"
#include "json.hpp"

namespace hydrocast {

namespace {

int hydrological_year(Date d, unsigned start_month) {
  return d.month() >= start_month ? d.year() : d.year() - 1;
}

Date hydrological_year_start(int year, unsigned start_month) { return Date::from_ymd(year, start_month, 1); }

}  // namespace

AnnualMaximaSeries extract_annual_maxima(const DailySeries& series, const YearDefinition& years,
                                         std::string gauge_id, std::string source) {
  if (years.start_month < 1 || years.start_month > 12) throw ValidationError("year start month must be 1..12");
  AnnualMaximaSeries out;
  out.gauge_id = std::move(gauge_id);
  out.source = std::move(source);
  if (series.values.empty()) throw DataError("annual maxima: empty series for " + out.gauge_id);

  std::map<int, std::pair<std::size_t, double>> per_year;  // year -> (present days, max)
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double v = series.values[i];
    if (is_missing(v)) continue;
    auto& [count, mx] = per_year.try_emplace(hydrological_year(series.date_at(i), years.start_month), 0, -HUGE_VAL)
                            .first->second;
    ++count;
    mx = std::max(mx, v);
  }
  for (const auto& [year, stat] : per_year) {
    const Date a = hydrological_year_start(year, years.start_month);
    const Date b = hydrological_year_start(year + 1, years.start_month);
    const double coverage = static_cast<double>(stat.first) / static_cast<double>(b - a);
    if (coverage >= years.min_coverage) out.maxima.emplace_back(year, stat.second);
  }
  if (out.maxima.empty()) {
    throw DataError("annual maxima: no year of " + out.gauge_id + " reaches " +
                    std::to_string(years.min_coverage) + " coverage");
  }
  return out;
}

Lp3Moments fit_lp3(const AnnualMaximaSeries& maxima, std::size_t min_years) {
  const std::size_t n = maxima.maxima.size();
  // Skew needs at least three values whatever the configured minimum.
  const std::size_t floor = std::max<std::size_t>(min_years, 3);
  if (n < floor) {
    throw DataError("sample too small: " + std::to_string(n) + " years < minimum " + std::to_string(floor));
  }
  std::vector<double> logs;
  logs.reserve(n);
  for (const auto& [year, q] : maxima.maxima) {
    if (!(q > 0.0)) {
      throw DataError("non-positive annual maximum in " + std::to_string(year) + "; zero-flow handling is disabled");
    }
    logs.push_back(std::log10(q));
  }
  const double dn = static_cast<double>(n);
  double mean = 0.0;
  for (double x : logs) mean += x;
  mean /= dn;
  double s2 = 0.0, s3 = 0.0;
  for (double x : logs) {
    const double d = x - mean;
    s2 += d * d;
    s3 += d * d * d;
  }
  const double sd = std::sqrt(s2 / (dn - 1.0));
  if (!(sd > 0.0)) throw NumericError("degenerate: zero variance in log annual maxima");
  Lp3Moments m;
  m.mean = mean;
  m.std = sd;
  m.skew = dn * s3 / ((dn - 1.0) * (dn - 2.0) * sd * sd * sd);
  m.n = n;
  return m;
}

double non_exceedance(double return_period) {
  if (return_period == 1.0) return_period = kOneYearReturnPeriod;
  if (!(return_period > 1.0)) throw ValidationError("return period must be > 1 (or exactly 1)");
  return 1.0 - 1.0 / return_period;
}

double standard_normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), p);
}

double wilson_hilferty_factor(double skew, double z) {
  if (std::abs(skew) < 1e-6) return z;
  const double k = skew / 6.0;
  const double inner = 1.0 + k * z - k * k;
  return (2.0 / skew) * (inner * inner * inner - 1.0);
}

double pearson3_factor(double skew, double p) {
  if (std::abs(skew) < 1e-6) return standard_normal_quantile(p);
  if (skew < 0.0) return -pearson3_factor(-skew, 1.0 - p);
  const double shape = 4.0 / (skew * skew);
  return (boost::math::gamma_p_inv(shape, p) - shape) / std::sqrt(shape);
}

double frequency_factor(double skew, double return_period, FrequencyFactorMethod method) {
  const double p = non_exceedance(return_period);
  if (method == FrequencyFactorMethod::wilson_hilferty) {
    return wilson_hilferty_factor(skew, standard_normal_quantile(p));
  }
  return pearson3_factor(skew, p);
}

double threshold(const Lp3Moments& m, double return_period, FrequencyFactorMethod method) {
  return std::pow(10.0, m.mean + frequency_factor(m.skew, return_period, method) * m.std);
}

const ReturnPeriodTable* ReturnPeriodTables::find(const std::string& gauge, const std::string& source) const {
  for (const auto& t : tables) {
    if (t.gauge_id == gauge && t.source == source) return &t;
  }
  return nullptr;
}

ReturnPeriodTables build_tables(std::span<const FrequencyInput> inputs, std::span<const double> return_periods,
                                const FrequencyOptions& options) {
  ReturnPeriodTables out;
  for (const auto& in : inputs) {
    try {
      const auto maxima = extract_annual_maxima(in.series, options.years, in.gauge_id, in.source);
      ReturnPeriodTable t;
      t.gauge_id = in.gauge_id;
      t.source = in.source;
      t.moments = fit_lp3(maxima, options.min_years);
      for (double T : return_periods) t.thresholds[T] = threshold(t.moments, T, options.method);
      double prev = -HUGE_VAL;
      for (const auto& [T, q] : t.thresholds) {
        if (!(q > prev) || !std::isfinite(q)) throw NumericError("thresholds not strictly increasing in T");
        prev = q;
      }
      out.tables.push_back(std::move(t));
    } catch (const Error& e) {
      out.skipped.push_back(SkipEntry{in.gauge_id, in.source, e.what()});
    }
  }
  return out;
}

std::string return_periods_csv(const ReturnPeriodTables& tables) {
  std::ostringstream out;
  out << "gauge_id,source,T,threshold,n_years,mean_log,std_log,skew_log\n";
  for (const auto& t : tables.tables) {
    for (const auto& [T, q] : t.thresholds) {
      out << t.gauge_id << ',' << t.source << ',' << csv::format_number(T) << ',' << csv::format_number(q) << ','
          << t.moments.n << ',' << csv::format_number(t.moments.mean) << ',' << csv::format_number(t.moments.std)
          << ',' << csv::format_number(t.moments.skew) << '\n';
    }
  }
  return out.str();
}

ReturnPeriodTables read_return_periods(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::string file = path.string();
  const std::size_t cg = t.column("gauge_id"), cs = t.column("source"), cT = t.column("T"),
                    cq = t.column("threshold"), cn = t.column("n_years"), cm = t.column("mean_log"),
                    csd = t.column("std_log"), csk = t.column("skew_log");
  ReturnPeriodTables out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    ReturnPeriodTable* table = nullptr;
    for (auto& existing : out.tables) {
      if (existing.gauge_id == row[cg] && existing.source == row[cs]) table = &existing;
    }
    if (table == nullptr) {
      ReturnPeriodTable fresh;
      fresh.gauge_id = row[cg];
      fresh.source = row[cs];
      fresh.moments = Lp3Moments{csv::parse_number(row[cm], file, line), csv::parse_number(row[csd], file, line),
                                 csv::parse_number(row[csk], file, line),
                                 static_cast<std::size_t>(csv::parse_number(row[cn], file, line))};
      out.tables.push_back(std::move(fresh));
      table = &out.tables.back();
    }
    table->thresholds[csv::parse_number(row[cT], file, line)] = csv::parse_number(row[cq], file, line);
  }
  return out;
}

std::string skip_report_json(std::span<const SkipEntry> skipped) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : skipped) j.push_back({{"gauge_id", s.gauge_id}, {"source", s.source}, {"reason", s.reason}});
  return nlohmann::json{{"skipped", j}}.dump(2) + "\n";
}

}  // namespace hydrocast
