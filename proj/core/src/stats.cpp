#include "hydrocast/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "hydrocast/error.hpp"
#include "json.hpp"

namespace hydrocast {

namespace {

// Mid-ranks of |d|, doubled so that they are integers.
std::vector<long> doubled_ranks(const std::vector<double>& abs_sorted_input, std::vector<std::size_t>& order,
                                double& tie_term) {
  const std::size_t n = abs_sorted_input.size();
  order.resize(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return abs_sorted_input[x] < abs_sorted_input[y]; });
  std::vector<long> ranks(n);
  tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && abs_sorted_input[order[j + 1]] == abs_sorted_input[order[i]]) ++j;
    const long twice_mid = static_cast<long>(i + 1 + j + 1);  // 2 * (i+1 + j+1)/2
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = twice_mid;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> diffs, WilcoxonMethod method) {
  if (diffs.empty()) throw ValidationError("wilcoxon: need at least one pair");
  std::vector<double> nz;
  for (double d : diffs) {
    if (std::isnan(d)) throw ValidationError("wilcoxon: undefined difference");
    if (d != 0.0) nz.push_back(d);
  }
  WilcoxonResult r;
  r.n_nonzero = nz.size();
  if (nz.empty()) {
    r.degenerate = true;
    r.p_value = 1.0;
    return r;
  }
  std::vector<double> mag(nz.size());
  for (std::size_t i = 0; i < nz.size(); ++i) mag[i] = std::abs(nz[i]);
  std::vector<std::size_t> order;
  double tie_term = 0.0;
  const std::vector<long> ranks = doubled_ranks(mag, order, tie_term);

  long w2 = 0;  // doubled W+
  for (std::size_t i = 0; i < nz.size(); ++i) {
    if (nz[i] > 0) w2 += ranks[i];
  }
  r.w_plus = static_cast<double>(w2) / 2.0;
  const std::size_t n = nz.size();

  const bool exact = method == WilcoxonMethod::exact || (method == WilcoxonMethod::automatic && n <= kWilcoxonExactMax);
  if (exact) {
    if (n > 60) throw ValidationError("wilcoxon: exact distribution limited to n <= 60");
    // Counts of each achievable doubled W+ over the 2^n sign patterns.
    const long total = std::accumulate(ranks.begin(), ranks.end(), 0L);
    std::vector<double> count(static_cast<std::size_t>(total) + 1, 0.0);
    count[0] = 1.0;
    long reach = 0;
    for (long rk : ranks) {
      for (long s = reach; s >= 0; --s) {
        if (count[static_cast<std::size_t>(s)] != 0.0) count[static_cast<std::size_t>(s + rk)] += count[static_cast<std::size_t>(s)];
      }
      reach += rk;
    }
    const double patterns = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0, upper = 0.0;
    for (long s = 0; s <= total; ++s) {
      if (s <= w2) lower += count[static_cast<std::size_t>(s)];
      if (s >= w2) upper += count[static_cast<std::size_t>(s)];
    }
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
    r.exact = true;
    return r;
  }
  const double dn = static_cast<double>(n);
  const double mean = dn * (dn + 1.0) / 4.0;
  const double var = dn * (dn + 1.0) * (2.0 * dn + 1.0) / 24.0 - tie_term / 48.0;
  if (!(var > 0.0)) {
    r.p_value = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(r.w_plus - mean) - 0.5) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return r;
}

EffectSize cohens_d(std::span<const double> diffs) {
  if (diffs.size() < 2) throw ValidationError("cohens_d: need at least two pairs");
  const double n = static_cast<double>(diffs.size());
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
  double ss = 0.0, scale = 0.0;
  for (double d : diffs) {
    ss += (d - mean) * (d - mean);
    scale = std::max(scale, std::abs(d));
  }
  const double sd = std::sqrt(ss / (n - 1.0));
  EffectSize e;
  // Spread at rounding level means the differences are constant.
  if (!(sd > kDegenerateSpread * scale)) {
    e.degenerate = true;
    return e;
  }
  e.d = mean / sd;
  return e;
}

Grouping parse_grouping(const std::string& s) {
  if (s == "all") return Grouping::all;
  if (s == "continent") return Grouping::continent;
  if (s == "T" || s == "return_period") return Grouping::return_period;
  if (s == "lead") return Grouping::lead;
  throw ValidationError("unknown grouping '" + s + "' (all, continent, T, lead)");
}

std::string to_string(Grouping g) {
  switch (g) {
    case Grouping::all: return "all";
    case Grouping::continent: return "continent";
    case Grouping::return_period: return "T";
    case Grouping::lead: return "lead";
  }
  return "all";
}

namespace {

std::string key_of(const GaugeScore& s) {
  return s.gauge_id + '\x1f' + std::to_string(s.return_period) + '\x1f' + std::to_string(s.lead_days);
}

std::string group_of(const GaugeScore& s, Grouping g) {
  switch (g) {
    case Grouping::all: return "all";
    case Grouping::continent: return s.continent;
    case Grouping::return_period: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", s.return_period);
      return buf;
    }
    case Grouping::lead: return std::to_string(s.lead_days);
  }
  return "all";
}

}  // namespace

ComparisonSet compare_models(std::span<const GaugeScore> a, std::span<const GaugeScore> b, const std::string& metric,
                             Grouping grouping) {
  ComparisonSet set;
  set.metric = metric;
  set.grouping = grouping;
  std::map<std::string, const GaugeScore*> by_key;
  for (const auto& s : b) {
    if (!by_key.emplace(key_of(s), &s).second) throw ValidationError("compare_models: duplicate score for " + s.gauge_id);
  }
  std::map<std::string, PairedComparison> groups;
  std::size_t unmatched = 0, undefined = 0;
  for (const auto& sa : a) {
    const auto it = by_key.find(key_of(sa));
    const std::string g = group_of(sa, grouping);
    auto& pc = groups[g];
    if (it == by_key.end()) {
      ++unmatched;
      continue;
    }
    if (!sa.value || !it->second->value) {
      ++undefined;
      continue;
    }
    pc.a.push_back(*sa.value);
    pc.b.push_back(*it->second->value);
  }
  if (unmatched > 0) set.notes.push_back(std::to_string(unmatched) + " scores of A have no counterpart in B");
  if (undefined > 0) set.notes.push_back(std::to_string(undefined) + " pairs dropped with an undefined side");
  for (auto& [name, pc] : groups) {
    pc.metric = metric;
    pc.group = name;
    pc.n = pc.a.size();
    if (pc.n == 0) {
      set.notes.push_back("group '" + name + "' omitted: no defined pairs");
      continue;
    }
    std::vector<double> diffs(pc.n);
    std::size_t better = 0, at_least = 0;
    for (std::size_t i = 0; i < pc.n; ++i) {
      diffs[i] = pc.a[i] - pc.b[i];
      if (diffs[i] > kTieBand) ++better;
      if (diffs[i] >= -kTieBand) ++at_least;
    }
    pc.fraction_better = static_cast<double>(better) / static_cast<double>(pc.n);
    pc.fraction_at_least = static_cast<double>(at_least) / static_cast<double>(pc.n);
    pc.wilcoxon = wilcoxon_signed_rank(diffs);
    if (pc.n >= 2) {
      pc.effect = cohens_d(diffs);
    } else {
      pc.effect.degenerate = true;
    }
    set.groups.push_back(std::move(pc));
  }
  return set;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values) {
    if (!std::isnan(x)) v.push_back(x);
  }
  if (v.empty()) throw ValidationError("box_stats: no defined values");
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.n = v.size();
  b.q1 = quantile_sorted(v, 0.25);
  b.median = quantile_sorted(v, 0.5);
  b.q3 = quantile_sorted(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.whisker_low = b.q1;
  b.whisker_high = b.q3;
  bool have_low = false;
  for (double x : v) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
      continue;
    }
    if (!have_low) {
      b.whisker_low = x;
      have_low = true;
    }
    b.whisker_high = x;
  }
  return b;
}

std::string comparison_json(std::span<const ComparisonSet> sets) {
  using nlohmann::json;
  json out = json::array();
  for (const auto& set : sets) {
    json groups = json::array();
    for (const auto& g : set.groups) {
      groups.push_back({{"group", g.group},
                        {"n", g.n},
                        {"fraction_better", g.fraction_better},
                        {"fraction_at_least", g.fraction_at_least},
                        {"p_value", g.wilcoxon.p_value},
                        {"wilcoxon_exact", g.wilcoxon.exact},
                        {"wilcoxon_degenerate", g.wilcoxon.degenerate},
                        {"cohens_d", g.effect.d ? json(*g.effect.d) : json(nullptr)},
                        {"cohens_d_degenerate", g.effect.degenerate}});
    }
    out.push_back({{"metric", set.metric}, {"grouping", to_string(set.grouping)}, {"groups", groups}, {"notes", set.notes}});
  }
  return json{{"comparisons", out}}.dump(2) + "\n";
}

}  // namespace hydrocast
