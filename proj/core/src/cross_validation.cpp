#include "hydrocast/cross_validation.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "hydrocast/basin.hpp"
#include "hydrocast/error.hpp"
#include "json.hpp"

namespace hydrocast {

SplitScheme parse_scheme(const std::string& s) {
  if (s == "random") return SplitScheme::random;
  if (s == "continent") return SplitScheme::continent;
  if (s == "climate") return SplitScheme::climate;
  if (s == "terminal-basin" || s == "terminal_basin") return SplitScheme::terminal_basin;
  throw ValidationError("unknown split scheme '" + s + "' (random, continent, climate, terminal-basin)");
}

std::string to_string(SplitScheme s) {
  switch (s) {
    case SplitScheme::random: return "random";
    case SplitScheme::continent: return "continent";
    case SplitScheme::climate: return "climate";
    case SplitScheme::terminal_basin: return "terminal-basin";
  }
  return "random";
}

GaugeLabels labels_of(const BasinRecord& r) {
  return GaugeLabels{r.gauge_id, r.continent, r.climate_zone, r.terminal_basin_id};
}

std::vector<std::vector<std::string>> random_spatial_folds(std::span<const std::string> gauges, std::size_t k,
                                                           std::uint64_t seed) {
  if (k == 0) throw ValidationError("k must be at least 1");
  if (k > gauges.size()) {
    throw ValidationError("k = " + std::to_string(k) + " exceeds gauge count " + std::to_string(gauges.size()));
  }
  std::vector<std::string> order(gauges.begin(), gauges.end());
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) throw ValidationError("duplicate gauge ids");
  // Fisher-Yates with rejection sampling, so the result does not depend on
  // the standard library's distribution implementations.
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::uint64_t bound = i;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw;
    do draw = rng();
    while (draw >= limit);
    std::swap(order[i - 1], order[draw % bound]);
  }
  std::vector<std::vector<std::string>> folds(k);
  const std::size_t base = order.size() / k, extra = order.size() % k;
  std::size_t at = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(at),
                    order.begin() + static_cast<std::ptrdiff_t>(at + size));
    std::sort(folds[f].begin(), folds[f].end());
    at += size;
  }
  return folds;
}

std::vector<std::vector<std::string>> grouped_folds(std::span<const GaugeLabels> gauges, SplitScheme scheme,
                                                    std::optional<std::size_t> expected_k) {
  if (scheme == SplitScheme::random) throw ValidationError("grouped_folds needs a grouping scheme");
  std::map<std::string, std::vector<std::string>> by_label;
  std::vector<std::string> unlabeled;
  for (const auto& g : gauges) {
    const std::string& label = scheme == SplitScheme::continent ? g.continent
                               : scheme == SplitScheme::climate ? g.climate_zone
                                                                : g.terminal_basin_id;
    if (label.empty()) {
      unlabeled.push_back(g.gauge_id);
    } else {
      by_label[label].push_back(g.gauge_id);
    }
  }
  if (!unlabeled.empty()) {
    std::string list;
    for (const auto& id : unlabeled) list += (list.empty() ? "" : ", ") + id;
    throw ValidationError("gauges without a " + to_string(scheme) + " label: " + list);
  }
  if (expected_k && by_label.size() != *expected_k) {
    throw ValidationError(to_string(scheme) + " labels give " + std::to_string(by_label.size()) +
                          " folds, expected " + std::to_string(*expected_k));
  }
  std::vector<std::vector<std::string>> folds;
  for (auto& [label, ids] : by_label) {
    std::sort(ids.begin(), ids.end());
    folds.push_back(std::move(ids));
  }
  return folds;
}

TemporalFold temporal_split(const DateRange& period, const DateRange& test_window, std::int32_t buffer_days) {
  if (period.empty()) throw ValidationError("empty period");
  if (buffer_days < 0) throw ValidationError("buffer must be non-negative");
  if (!period.contains(test_window)) throw ValidationError("test window outside the period");
  TemporalFold f;
  f.test = test_window;
  const DateRange before{period.first, test_window.first - buffer_days - 1};
  const DateRange after{test_window.last + buffer_days + 1, period.last};
  if (!before.empty()) f.train.push_back(before);
  if (!after.empty()) f.train.push_back(after);
  return f;
}

namespace {

std::vector<DateRange> chunk_period(const DateRange& period, std::size_t n) {
  const auto span = static_cast<std::size_t>(period.length());
  std::vector<DateRange> out;
  const std::size_t base = span / n, extra = span % n;
  Date at = period.first;
  for (std::size_t i = 0; i < n; ++i) {
    const auto len = static_cast<std::int32_t>(base + (i < extra ? 1 : 0));
    out.push_back(DateRange{at, at + (len - 1)});
    at = at + len;
  }
  return out;
}

bool feasible(const DateRange& period, std::size_t n, std::int32_t buffer) {
  if (static_cast<std::size_t>(period.length()) < n) return false;
  for (const auto& w : chunk_period(period, n)) {
    if (temporal_split(period, w, buffer).train.empty()) return false;
  }
  return true;
}

}  // namespace

std::vector<TemporalFold> temporal_folds(const DateRange& period, std::size_t n, std::int32_t buffer_days) {
  if (n < 2) throw ValidationError("temporal folds need n >= 2");
  if (buffer_days < 0) throw ValidationError("buffer must be non-negative");
  if (!feasible(period, n, buffer_days)) {
    std::int32_t need = std::max<std::int32_t>(period.length(), 1);
    while (!feasible(DateRange{period.first, period.first + (need - 1)}, n, buffer_days)) ++need;
    throw ValidationError("period of " + std::to_string(period.length()) + " days is too short for " +
                          std::to_string(n) + " temporal folds with a " + std::to_string(buffer_days) +
                          "-day buffer; minimum span is " + std::to_string(need) + " days");
  }
  std::vector<TemporalFold> out;
  for (const auto& w : chunk_period(period, n)) out.push_back(temporal_split(period, w, buffer_days));
  return out;
}

SplitPlan make_split_plan(std::span<const GaugeLabels> gauges, const SplitOptions& o) {
  std::vector<std::vector<std::string>> spatial;
  if (o.scheme == SplitScheme::random) {
    std::vector<std::string> ids;
    for (const auto& g : gauges) ids.push_back(g.gauge_id);
    spatial = random_spatial_folds(ids, o.k, o.seed);
  } else {
    spatial = grouped_folds(gauges, o.scheme, o.expected_k);
  }
  if (spatial.size() < 2) throw ValidationError("a split plan needs at least two spatial folds");
  const auto temporal = temporal_folds(o.period, o.temporal_folds, o.buffer_days);

  SplitPlan plan;
  plan.scheme = o.scheme;
  plan.seed = o.seed;
  plan.buffer_days = o.buffer_days;
  plan.period = o.period;
  int id = 0;
  for (std::size_t s = 0; s < spatial.size(); ++s) {
    std::vector<std::string> train;
    for (std::size_t other = 0; other < spatial.size(); ++other) {
      if (other != s) train.insert(train.end(), spatial[other].begin(), spatial[other].end());
    }
    std::sort(train.begin(), train.end());
    for (std::size_t t = 0; t < temporal.size(); ++t) {
      Fold f;
      f.fold_id = id++;
      f.spatial_fold = static_cast<int>(s);
      f.temporal_fold = static_cast<int>(t);
      f.test_gauges = spatial[s];
      f.train_gauges = train;
      f.test_ranges = {temporal[t].test};
      f.train_ranges = temporal[t].train;
      plan.folds.push_back(std::move(f));
    }
  }
  return plan;
}

namespace {

nlohmann::json ranges_json(const std::vector<DateRange>& ranges) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : ranges) j.push_back({r.first.iso(), r.last.iso()});
  return j;
}

std::vector<DateRange> parse_ranges(const nlohmann::json& j) {
  std::vector<DateRange> out;
  for (const auto& r : j) {
    if (!r.is_array() || r.size() != 2) throw ValidationError("split plan: date range must be [first, last]");
    out.push_back(DateRange{Date::parse(r[0].get<std::string>()), Date::parse(r[1].get<std::string>())});
  }
  return out;
}

}  // namespace

std::string split_plan_json(const SplitPlan& plan) {
  using nlohmann::json;
  json folds = json::array();
  for (const auto& f : plan.folds) {
    folds.push_back({{"fold_id", f.fold_id},
                     {"spatial_fold", f.spatial_fold},
                     {"temporal_fold", f.temporal_fold},
                     {"test_gauges", f.test_gauges},
                     {"train_gauges", f.train_gauges},
                     {"test_ranges", ranges_json(f.test_ranges)},
                     {"train_ranges", ranges_json(f.train_ranges)}});
  }
  json j{{"scheme", to_string(plan.scheme)},
         {"seed", plan.seed},
         {"buffer_days", plan.buffer_days},
         {"period", {plan.period.first.iso(), plan.period.last.iso()}},
         {"pairing", plan.pairing},
         {"folds", folds}};
  return j.dump(2) + "\n";
}

SplitPlan parse_split_plan(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SplitPlan plan;
    plan.scheme = parse_scheme(j.at("scheme").get<std::string>());
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.buffer_days = j.at("buffer_days").get<std::int32_t>();
    const auto period = parse_ranges(nlohmann::json::array({j.at("period")}));
    plan.period = period.front();
    plan.pairing = j.at("pairing").get<std::string>();
    for (const auto& jf : j.at("folds")) {
      Fold f;
      f.fold_id = jf.at("fold_id").get<int>();
      f.spatial_fold = jf.at("spatial_fold").get<int>();
      f.temporal_fold = jf.at("temporal_fold").get<int>();
      f.test_gauges = jf.at("test_gauges").get<std::vector<std::string>>();
      f.train_gauges = jf.at("train_gauges").get<std::vector<std::string>>();
      f.test_ranges = parse_ranges(jf.at("test_ranges"));
      f.train_ranges = parse_ranges(jf.at("train_ranges"));
      plan.folds.push_back(std::move(f));
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("split plan: ") + e.what());
  }
}

SplitPlan read_split_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_split_plan(ss.str());
}

}  // namespace hydrocast
