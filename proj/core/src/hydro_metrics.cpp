#include "hydrocast/hydro_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"

namespace hydrocast {

namespace {

struct Moments {
  double mean_s = 0, mean_o = 0, sd_s = 0, sd_o = 0, cov = 0;
};

Moments moments(const std::vector<double>& s, const std::vector<double>& o) {
  Moments m;
  const double n = static_cast<double>(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    m.mean_s += s[i];
    m.mean_o += o[i];
  }
  m.mean_s /= n;
  m.mean_o /= n;
  double vs = 0, vo = 0, c = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double ds = s[i] - m.mean_s, d_o = o[i] - m.mean_o;
    vs += ds * ds;
    vo += d_o * d_o;
    c += ds * d_o;
  }
  m.sd_s = std::sqrt(vs / n);
  m.sd_o = std::sqrt(vo / n);
  m.cov = c / n;
  return m;
}

std::optional<double> nse(const std::vector<double>& s, const std::vector<double>& o, double mean_o) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    num += (s[i] - o[i]) * (s[i] - o[i]);
    den += (o[i] - mean_o) * (o[i] - mean_o);
  }
  if (!(den > 0.0)) return std::nullopt;
  return 1.0 - num / den;
}

std::optional<double> kge(const Moments& m) {
  if (!(m.sd_o > 0.0) || !(m.sd_s > 0.0) || m.mean_o == 0.0) return std::nullopt;
  const double r = m.cov / (m.sd_s * m.sd_o);
  const double a = m.sd_s / m.sd_o;
  const double b = m.mean_s / m.mean_o;
  return 1.0 - std::sqrt((r - 1) * (r - 1) + (a - 1) * (a - 1) + (b - 1) * (b - 1));
}

}  // namespace

HydroMetrics hydrograph_metrics(std::span<const double> sim, std::span<const double> obs) {
  if (sim.size() != obs.size()) throw ShapeError("hydrograph_metrics: sim and obs lengths differ");
  std::vector<double> s, o;
  for (std::size_t i = 0; i < sim.size(); ++i) {
    if (std::isnan(sim[i]) || std::isnan(obs[i])) continue;
    s.push_back(sim[i]);
    o.push_back(obs[i]);
  }
  HydroMetrics out;
  out.n = s.size();
  if (s.empty()) return out;

  const Moments m = moments(s, o);
  out.nse = nse(s, o, m.mean_o);
  if (m.sd_o > 0.0) {
    out.alpha_nse = m.sd_s / m.sd_o;
    out.beta_nse = (m.mean_s - m.mean_o) / m.sd_o;
  }
  out.kge = kge(m);
  if (m.mean_o != 0.0) out.beta_kge = m.mean_s / m.mean_o;

  const double eps = kLogEpsilonFraction * m.mean_o;
  if (eps > 0.0) {
    std::vector<double> ls(s.size()), lo(o.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      ls[i] = std::log(std::max(s[i], 0.0) + eps);
      lo[i] = std::log(std::max(o[i], 0.0) + eps);
    }
    const Moments lm = moments(ls, lo);
    out.log_nse = nse(ls, lo, lm.mean_o);
    out.log_kge = kge(lm);
  }
  return out;
}

std::optional<double> metric_by_name(const HydroMetrics& m, const std::string& name) {
  if (name == "nse") return m.nse;
  if (name == "log_nse") return m.log_nse;
  if (name == "alpha_nse") return m.alpha_nse;
  if (name == "beta_nse") return m.beta_nse;
  if (name == "kge") return m.kge;
  if (name == "log_kge") return m.log_kge;
  if (name == "beta_kge") return m.beta_kge;
  throw ValidationError("unknown hydrograph metric '" + name + "'");
}

std::string hydro_metrics_csv(std::span<const HydroMetricsRow> rows) {
  std::ostringstream out;
  out << "gauge_id,model,lead,n";
  for (const auto& name : kHydroMetricNames) out << ',' << name;
  out << '\n';
  for (const auto& r : rows) {
    out << r.gauge_id << ',' << r.model << ',' << r.lead_days << ',' << r.metrics.n;
    for (const auto& name : kHydroMetricNames) {
      const auto v = metric_by_name(r.metrics, name);
      out << ',' << (v ? csv::format_number(*v) : std::string());
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace hydrocast
