#include <algorithm>
#include <limits>
#include <map>
#include <set>

#include "doctest.h"
#include "hydrocast/cross_validation.hpp"
#include "hydrocast/error.hpp"

using namespace hydrocast;

namespace {

std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("g" + std::to_string(1000 + i));
  return out;
}

std::vector<GaugeLabels> labelled(std::size_t n, std::size_t continents, std::size_t climates, std::size_t basins) {
  std::vector<GaugeLabels> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({"g" + std::to_string(1000 + i), "c" + std::to_string(i % continents),
                   "k" + std::to_string(i % climates), "t" + std::to_string((i * 7) % basins)});
  }
  return out;
}

// Smallest |train day - test day| over every pair, by direct enumeration.
std::int32_t min_gap(const Fold& f) {
  std::int32_t best = std::numeric_limits<std::int32_t>::max();
  for (const auto& tr : f.train_ranges) {
    for (Date a = tr.first; a <= tr.last; ++a) {
      for (const auto& te : f.test_ranges) {
        for (Date b = te.first; b <= te.last; ++b) best = std::min(best, std::abs(a - b));
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("random folds partition the gauges into near-equal sets") {
  const auto g = ids(100);
  const auto folds = random_spatial_folds(g, 10, 7);
  REQUIRE(folds.size() == 10);
  std::set<std::string> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 10);
    for (const auto& id : f) CHECK(seen.insert(id).second);
  }
  CHECK(seen.size() == 100);
  CHECK(random_spatial_folds(g, 10, 7) == folds);
  CHECK(random_spatial_folds(g, 10, 8) != folds);
}

TEST_CASE("remainder gauges go to the leading folds") {
  const auto folds = random_spatial_folds(ids(23), 5, 1);
  std::vector<std::size_t> sizes;
  for (const auto& f : folds) sizes.push_back(f.size());
  CHECK(sizes == std::vector<std::size_t>{5, 5, 5, 4, 4});
  CHECK_THROWS_AS(random_spatial_folds(ids(3), 4, 1), ValidationError);
}

TEST_CASE("grouped folds follow the labels") {
  const auto g = labelled(60, 6, 13, 8);
  CHECK(grouped_folds(g, SplitScheme::continent, 6).size() == 6);
  CHECK(grouped_folds(g, SplitScheme::climate, 13).size() == 13);
  const auto tb = grouped_folds(g, SplitScheme::terminal_basin, 8);
  REQUIRE(tb.size() == 8);
  for (const auto& fold : tb) {
    std::set<std::string> labels;
    for (const auto& id : fold) {
      const auto it = std::find_if(g.begin(), g.end(), [&](const GaugeLabels& x) { return x.gauge_id == id; });
      labels.insert(it->terminal_basin_id);
    }
    CHECK(labels.size() == 1);
  }
  CHECK_THROWS_AS(grouped_folds(g, SplitScheme::continent, 7), ValidationError);
  auto missing = g;
  missing[3].climate_zone.clear();
  CHECK_THROWS_WITH_AS(grouped_folds(missing, SplitScheme::climate), doctest::Contains("g1003"), ValidationError);
}

TEST_CASE("temporal split leaves a one-year buffer") {
  const DateRange period{Date::parse("1984-01-01"), Date::parse("2021-12-31")};
  const DateRange test{Date::parse("2014-01-01"), Date::parse("2021-12-31")};
  const auto f = temporal_split(period, test, 365);
  REQUIRE(f.train.size() == 1);
  CHECK(f.train[0].first == period.first);
  CHECK(f.train[0].last == Date::parse("2012-12-31"));
  CHECK(test.first - f.train[0].last == 366);

  const auto zero = temporal_split(period, test, 0);
  CHECK(zero.train[0].last == Date::parse("2013-12-31"));
}

TEST_CASE("temporal folds cover the period and report infeasible geometry") {
  const DateRange period{Date::parse("2000-01-01"), Date::parse("2009-12-31")};
  const auto folds = temporal_folds(period, 4, 365);
  REQUIRE(folds.size() == 4);
  std::int32_t covered = 0;
  for (std::size_t i = 0; i < folds.size(); ++i) {
    covered += folds[i].test.length();
    if (i > 0) CHECK(folds[i].test.first == folds[i - 1].test.last + 1);
    CHECK_FALSE(folds[i].train.empty());
  }
  CHECK(covered == period.length());
  const DateRange short_period{Date::parse("2000-01-01"), Date::parse("2000-12-31")};
  CHECK_THROWS_WITH_AS(temporal_folds(short_period, 2, 365), doctest::Contains("minimum span is 732"),
                       ValidationError);
  CHECK_NOTHROW(temporal_folds(DateRange{short_period.first, short_period.first + 731}, 2, 365));
}

TEST_CASE("every fold keeps train and test apart in space and time") {
  const auto g = labelled(24, 6, 13, 8);
  SplitOptions o;
  o.k = 4;
  o.seed = 3;
  o.period = DateRange{Date::parse("2001-01-01"), Date::parse("2006-12-31")};
  o.temporal_folds = 3;
  o.buffer_days = 365;
  for (auto scheme : {SplitScheme::random, SplitScheme::continent, SplitScheme::terminal_basin}) {
    o.scheme = scheme;
    const auto plan = make_split_plan(g, o);
    std::map<std::pair<std::string, std::int32_t>, int> tested;
    for (const auto& f : plan.folds) {
      for (const auto& id : f.test_gauges) {
        CHECK_FALSE(std::binary_search(f.train_gauges.begin(), f.train_gauges.end(), id));
      }
      CHECK(min_gap(f) > 365);
      for (const auto& id : f.test_gauges) {
        for (const auto& r : f.test_ranges) {
          for (Date d = r.first; d <= r.last; ++d) ++tested[{id, d.days()}];
        }
      }
    }
    CHECK(tested.size() == 24u * static_cast<std::size_t>(o.period.length()));
    CHECK(std::all_of(tested.begin(), tested.end(), [](const auto& kv) { return kv.second == 1; }));
  }
}

TEST_CASE("plans round-trip through JSON") {
  SplitOptions o;
  o.k = 3;
  o.seed = 11;
  o.period = DateRange{Date::parse("2001-01-01"), Date::parse("2005-12-31")};
  const auto plan = make_split_plan(labelled(9, 3, 3, 3), o);
  CHECK(plan.folds.size() == 6);
  const auto text = split_plan_json(plan);
  CHECK(parse_split_plan(text) == plan);
  CHECK(split_plan_json(parse_split_plan(text)) == text);
  CHECK_THROWS_AS(parse_split_plan("{\"scheme\": \"random\"}"), ValidationError);
}
