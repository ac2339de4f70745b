#include "hydrocast/synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "hydrocast/error.hpp"

namespace hydrocast {

SyntheticDataset make_synthetic_dataset(const SyntheticOptions& o) {
  if (o.basins == 0 || o.years < 1) throw ValidationError("synthetic dataset needs basins and years");
  const Date start = Date::from_ymd(o.start_year, 1, 1);
  const Date end = Date::from_ymd(o.start_year + o.years, 1, 1);
  const auto days = static_cast<std::size_t>(end - start);
  const int fc_year = o.forecast_start_year > 0 ? o.forecast_start_year : o.start_year + 1;
  const Date fc_start = Date::from_ymd(fc_year, 1, 1);

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticDataset out;
  for (std::size_t b = 0; b < o.basins; ++b) {
    BasinRecord r;
    char id[32];
    std::snprintf(id, sizeof id, "syn%03zu", b);
    r.gauge_id = id;
    r.continent = kSyntheticContinents[b % kSyntheticContinents.size()];
    r.climate_zone = "cz" + std::to_string(b % 13);
    r.terminal_basin_id = "tb" + std::to_string(b % 8);
    const double area = 100.0 * std::exp(3.0 * unit(rng));
    r.drainage_area_reported = area;
    r.drainage_area_polygon = area * (b < o.area_outliers ? 1.5 : 1.0 + 0.05 * (unit(rng) - 0.5));
    r.start = start;
    r.num_days = days;

    const double k = 0.05 + 0.25 * unit(rng);
    const double c = 0.3 + 0.5 * unit(rng);
    const double wet = 0.2 + 0.3 * unit(rng);     // probability of a rain day
    const double depth = 4.0 + 8.0 * unit(rng);   // mean rain-day depth, mm
    const double t_mean = 5.0 + 15.0 * unit(rng);
    const double elevation = 200.0 + 2000.0 * unit(rng);

    std::vector<double> precip(days), temp(days), hres(days), q(days), clean(days);
    double storage = c * wet * depth / k;  // start near equilibrium
    for (std::size_t t = 0; t < days; ++t) {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>((start + static_cast<std::int32_t>(t)).days()) / 365.25;
      const double season = 0.5 * (1.0 - std::cos(phase));  // 0 in winter, 1 in summer
      temp[t] = t_mean + 10.0 * (season - 0.5) + 2.0 * gauss(rng);
      precip[t] = unit(rng) < wet ? -depth * std::log(1.0 - unit(rng)) : 0.0;
      const double ct = c * (1.0 - 0.5 * season);
      storage = (1.0 - k) * storage + ct * precip[t];
      clean[t] = k * storage;
      q[t] = clean[t] * std::exp(o.noise * gauss(rng));
      if (unit(rng) < o.missing_discharge) q[t] = std::nan("");
      hres[t] = r.date_at(t) >= fc_start ? precip[t] * std::exp(o.forecast_noise * gauss(rng)) : std::nan("");
    }
    r.forcings.push_back(ForcingSource{"era5l", {"precip", "temp"}, {precip, temp}});
    r.forcings.push_back(ForcingSource{"hres", {"precip"}, {hres}});
    r.discharge = q;
    r.attributes.set("area", area);
    r.attributes.set("recession_k", k);
    r.attributes.set("runoff_coef", c);
    r.attributes.set("wet_fraction", wet);
    r.attributes.set("mean_temp", t_mean);
    r.attributes.set("elevation", elevation);
    r.attributes.set("pet", 400.0 + 40.0 * t_mean);
    r.attributes.set("aet", (400.0 + 40.0 * t_mean) * (1.0 - c));
    out.truth.push_back(SyntheticBasinTruth{r.gauge_id, k, c, std::move(clean)});
    out.dataset.basins.push_back(std::move(r));
  }
  out.dataset.schema = infer_schema(out.dataset.basins);
  return out;
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& root) {
  for (const auto& b : dataset.basins) write_basin(b, root / b.gauge_id);
}

}  // namespace hydrocast
