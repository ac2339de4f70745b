#include "hydrocast/events.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"

namespace hydrocast {

namespace {

bool above(double v, double thr) { return !std::isnan(v) && v >= thr; }

std::optional<double> parse_optional(const std::string& s, const std::string& file, std::size_t line) {
  const double v = csv::parse_number(s, file, line);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

std::string format_optional(const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); }

}  // namespace

std::vector<std::size_t> crossing_indices(std::span<const double> flow, double threshold) {
  std::vector<std::size_t> out;
  bool prev = false;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const bool now = above(flow[i], threshold);
    if (now && !prev) out.push_back(i);
    prev = now;
  }
  return out;
}

EventList extract_events(const DailySeries& flow, double threshold, std::string gauge_id, std::string source,
                         double return_period) {
  EventList ev;
  ev.gauge_id = std::move(gauge_id);
  ev.source = std::move(source);
  ev.return_period = return_period;
  for (std::size_t i : crossing_indices(flow.values, threshold)) ev.dates.push_back(flow.date_at(i));
  ev.starts_above = !flow.values.empty() && above(flow.values.front(), threshold);
  ev.missing_days = static_cast<std::size_t>(std::count_if(flow.values.begin(), flow.values.end(),
                                                           [](double v) { return std::isnan(v); }));
  return ev;
}

MatchCounts match_events(std::span<const std::int32_t> predicted, std::span<const std::int32_t> observed,
                         std::int32_t window) {
  // Greedy in sorted order: each predicted event takes the earliest observed
  // event still reachable. This is a maximum matching for interval windows.
  std::size_t j = 0, pairs = 0;
  for (std::int32_t p : predicted) {
    while (j < observed.size() && observed[j] < p - window) ++j;
    if (j < observed.size() && observed[j] <= p + window) {
      ++pairs;
      ++j;
    }
  }
  return MatchCounts{pairs, predicted.size() - pairs, observed.size() - pairs};
}

MatchCounts match_events(const EventList& predicted, const EventList& observed, std::int32_t window) {
  std::vector<std::int32_t> p, o;
  p.reserve(predicted.dates.size());
  o.reserve(observed.dates.size());
  for (Date d : predicted.dates) p.push_back(d.days());
  for (Date d : observed.dates) o.push_back(d.days());
  return match_events(p, o, window);
}

Prf1 prf1(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf1 r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (r.precision && r.recall) {
    const double s = *r.precision + *r.recall;
    r.f1 = s > 0.0 ? 2.0 * *r.precision * *r.recall / s : 0.0;
  }
  return r;
}

EventScore score_events(const DailySeries& observed, const DailySeries& simulated, double observed_threshold,
                        double simulated_threshold, std::int32_t window) {
  EventScore s;
  const Date first = std::max(observed.start, simulated.start);
  const Date last = std::min(observed.date_at(observed.size()) - 1, simulated.date_at(simulated.size()) - 1);
  if (observed.values.empty() || simulated.values.empty() || last < first) {
    s.scores = prf1(s.counts);
    return s;
  }
  const auto clip = [&](const DailySeries& x) {
    const auto a = static_cast<std::size_t>(first - x.start);
    const auto n = static_cast<std::size_t>(last - first + 1);
    return DailySeries{first, std::vector<double>(x.values.begin() + static_cast<std::ptrdiff_t>(a),
                                                  x.values.begin() + static_cast<std::ptrdiff_t>(a + n))};
  };
  const EventList o = extract_events(clip(observed), observed_threshold);
  const EventList p = extract_events(clip(simulated), simulated_threshold);
  s.counts = match_events(p, o, window);
  s.scores = prf1(s.counts);
  s.starts_above = o.starts_above || p.starts_above;
  s.missing_days = o.missing_days;
  return s;
}

std::string event_scores_csv(std::span<const EventScore> scores) {
  std::ostringstream out;
  out << "gauge_id,model,T,lead,TP,FP,FN,precision,recall,f1\n";
  for (const auto& s : scores) {
    out << s.gauge_id << ',' << s.model << ',' << csv::format_number(s.return_period) << ',' << s.lead_days << ','
        << s.counts.tp << ',' << s.counts.fp << ',' << s.counts.fn << ',' << format_optional(s.scores.precision)
        << ',' << format_optional(s.scores.recall) << ',' << format_optional(s.scores.f1) << '\n';
  }
  return out.str();
}

std::vector<EventScore> read_event_scores(const std::filesystem::path& path) {
  const csv::Table t = csv::read(path);
  const std::string file = path.string();
  const std::size_t cg = t.column("gauge_id"), cm = t.column("model"), cT = t.column("T"), cl = t.column("lead"),
                    ctp = t.column("TP"), cfp = t.column("FP"), cfn = t.column("FN"), cp = t.column("precision"),
                    cr = t.column("recall"), cf = t.column("f1");
  std::vector<EventScore> out;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = t.line_numbers[r];
    const auto count = [&](std::size_t c) {
      const double v = csv::parse_number(row[c], file, line);
      if (!(v >= 0.0) || v != std::floor(v)) throw ParseError(file, line, "count must be a non-negative integer");
      return static_cast<std::size_t>(v);
    };
    EventScore s;
    s.gauge_id = row[cg];
    s.model = row[cm];
    s.return_period = csv::parse_number(row[cT], file, line);
    s.lead_days = static_cast<int>(csv::parse_number(row[cl], file, line));
    s.counts = MatchCounts{count(ctp), count(cfp), count(cfn)};
    s.scores = Prf1{parse_optional(row[cp], file, line), parse_optional(row[cr], file, line),
                    parse_optional(row[cf], file, line)};
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hydrocast
