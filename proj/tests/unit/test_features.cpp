#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hydrocast/error.hpp"
#include "hydrocast/features.hpp"

using namespace hydrocast;

namespace {

BasinRecord record(const std::string& id, std::vector<double> era, std::vector<double> hres, std::vector<double> q,
                   double area) {
  BasinRecord r;
  r.gauge_id = id;
  r.start = Date::parse("2010-01-01");
  r.num_days = q.size();
  r.forcings.push_back({"era5l", {"precip"}, {std::move(era)}});
  r.forcings.push_back({"hres", {"precip"}, {std::move(hres)}});
  r.discharge = std::move(q);
  r.attributes.set("area", area);
  r.attributes.set("flat", 1.0);
  return r;
}

DatasetSchema schema() {
  DatasetSchema s;
  s.sources["era5l"] = {"precip"};
  s.sources["hres"] = {"precip"};
  s.attributes = {"area", "flat"};
  return s;
}

const double kNaN = std::nan("");

}  // namespace

TEST_CASE("schema expansion from sources") {
  const auto in = InputSchema::from_sources(schema(), {"era5l"}, {"hres"}, {{"hres.precip", {"era5l.precip"}}});
  CHECK(in.hindcast_features == std::vector<std::string>{"era5l.precip"});
  CHECK(in.forecast_features == std::vector<std::string>{"hres.precip"});
  CHECK(in.static_features == std::vector<std::string>{"area", "flat"});
  CHECK_THROWS_AS(InputSchema::from_sources(schema(), {"gfs"}, {}, {}), ValidationError);
}

TEST_CASE("standardization uses training days only") {
  std::vector<BasinRecord> recs{record("a", {1, 2, 3, 100}, {1, 2, 3, 4}, {1, 2, 3, 50}, 10),
                                record("b", {3, 4, 5, 100}, {3, 4, 5, 6}, {3, 4, 5, 50}, 30)};
  const auto in = InputSchema::from_sources(schema(), {"era5l"}, {"hres"}, {});
  const std::vector<DateRange> train{{Date::parse("2010-01-01"), Date::parse("2010-01-03")}};
  const auto t = fit_transform(recs, in, train);
  // era5l training values {1,2,3,3,4,5}: mean 3, sample sd sqrt(10/5).
  CHECK(t.at("era5l.precip").mean == doctest::Approx(3.0));
  CHECK(t.at("era5l.precip").std == doctest::Approx(std::sqrt(2.0)));
  CHECK(t.at("area").mean == doctest::Approx(20.0));
  CHECK(t.at(kTargetFeature).mean == doctest::Approx(3.0));
  CHECK(t.invert("era5l.precip", t.apply("era5l.precip", 7.25)) == doctest::Approx(7.25));
  // A constant attribute carries no information and is dropped with a warning.
  CHECK(t.schema.static_features == std::vector<std::string>{"area"});
  CHECK(t.dropped == std::vector<std::string>{"flat"});
  CHECK(t.warnings.size() == 1);
  CHECK_THROWS_AS(t.at("flat"), ValidationError);
}

TEST_CASE("imputation substitutes first, then fills with the mean, and flags both") {
  std::vector<BasinRecord> recs{record("a", {1, 2, 3, 4, 5}, {kNaN, 2.5, kNaN, kNaN, 4.5}, {1, 2, kNaN, 3, 4}, 10),
                                record("b", {2, 3, 4, 5, 6}, {1, 2, 3, 4, 5}, {1, 2, 3, 3, 4}, 20)};
  recs[0].forcings[0].columns[0][3] = kNaN;  // era5l gap on a day hres also lacks
  const auto in = InputSchema::from_sources(schema(), {"era5l"}, {"hres"}, {{"hres.precip", {"era5l.precip"}}});
  const auto t = fit_transform(recs, in);
  const auto p = impute(recs[0], t);
  REQUIRE(p.hindcast.cols == 2);
  REQUIRE(p.forecast.cols == 2);
  const auto& tags = p.imputation.tags;
  // hindcast: only day 3 missing, no substitute configured.
  CHECK(tags[0][3] == ImputeTag::mean_fill);
  CHECK(p.hindcast(3, 0) == 0.0);
  CHECK(p.hindcast(3, 1) == 1.0);
  CHECK(p.hindcast(2, 1) == 0.0);
  // forecast: days 0 and 2 come from era5l, day 3 from the mean.
  CHECK(tags[1][0] == ImputeTag::substitute);
  CHECK(p.forecast(0, 0) == doctest::Approx(t.apply("hres.precip", 1.0)));
  CHECK(p.forecast(0, 1) == 1.0);
  CHECK(tags[1][1] == ImputeTag::observed);
  CHECK(p.forecast(1, 1) == 0.0);
  CHECK(tags[1][2] == ImputeTag::substitute);
  CHECK(tags[1][3] == ImputeTag::mean_fill);
  CHECK(p.imputation.count(ImputeTag::substitute) == 2);
  CHECK(p.imputation.count(ImputeTag::mean_fill) == 2);
  // Every model input is finite; the target keeps its gaps.
  for (double v : p.hindcast.data) CHECK(std::isfinite(v));
  for (double v : p.forecast.data) CHECK(std::isfinite(v));
  CHECK(std::isnan(p.target[2]));
  CHECK(p.statics.size() == 1);
}

TEST_CASE("a feature missing everywhere in a basin is an error") {
  std::vector<BasinRecord> recs{record("a", {1, 2, 3}, {1, 2, 4}, {1, 2, 3}, 10),
                                record("b", {kNaN, kNaN, kNaN}, {kNaN, kNaN, kNaN}, {1, 2, 3}, 20)};
  const auto in = InputSchema::from_sources(schema(), {"era5l"}, {"hres"}, {{"hres.precip", {"era5l.precip"}}});
  const auto t = fit_transform(recs, in);
  CHECK_NOTHROW(impute(recs[0], t));
  CHECK_THROWS_WITH_AS(impute(recs[1], t), doctest::Contains("b"), DataError);
}

TEST_CASE("a feature without training data is dropped") {
  std::vector<BasinRecord> recs{record("a", {1, 2, 3}, {kNaN, kNaN, kNaN}, {1, 2, 3}, 10),
                                record("b", {2, 2, 5}, {kNaN, kNaN, kNaN}, {1, 2, 3}, 20)};
  const auto in = InputSchema::from_sources(schema(), {"era5l"}, {"hres"}, {});
  const auto t = fit_transform(recs, in);
  CHECK(t.schema.forecast_features.empty());
  CHECK(std::find(t.dropped.begin(), t.dropped.end(), "hres.precip") != t.dropped.end());
}
