#include "hydrocast/ald.hpp"

#include <cmath>
#include <string>

#include "hydrocast/error.hpp"

namespace hydrocast {

void validate(const DensityParams& p) {
  if (!std::isfinite(p.location) || !std::isfinite(p.scale) || !std::isfinite(p.asymmetry) ||
      p.scale <= 0.0 || p.asymmetry <= 0.0 || p.asymmetry >= 1.0) {
    throw NumericError("invalid asymmetric Laplace parameters (mu=" + std::to_string(p.location) +
                       ", b=" + std::to_string(p.scale) + ", tau=" + std::to_string(p.asymmetry) + ")");
  }
}

double ald_log_density(double y, const DensityParams& p) {
  const double u = (y - p.location) / p.scale;
  const double tau = p.asymmetry;
  const double check = u * (tau - (u < 0.0 ? 1.0 : 0.0));
  return std::log(tau) + std::log1p(-tau) - std::log(p.scale) - check;
}

double ald_cdf(double y, const DensityParams& p) {
  const double u = (y - p.location) / p.scale;
  const double tau = p.asymmetry;
  if (u < 0.0) return tau * std::exp((1.0 - tau) * u);
  return 1.0 - (1.0 - tau) * std::exp(-tau * u);
}

double ald_quantile(double prob, const DensityParams& p) {
  if (!(prob > 0.0 && prob < 1.0)) throw ValidationError("quantile level must lie in (0,1)");
  const double tau = p.asymmetry;
  if (prob <= tau) return p.location + p.scale * std::log(prob / tau) / (1.0 - tau);
  return p.location - p.scale * std::log((1.0 - prob) / (1.0 - tau)) / tau;
}

double ald_median(const DensityParams& p) { return ald_quantile(0.5, p); }

double ald_nll(std::span<const DensityParams> params, std::span<const double> targets,
               std::span<const bool> mask) {
  if (params.size() != targets.size() || targets.size() != mask.size()) {
    throw ShapeError("ald_nll: params, targets and mask must have equal length");
  }
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!mask[i]) continue;
    total -= ald_log_density(targets[i], params[i]);
    ++n;
  }
  if (n == 0) throw DataError("no training signal: every target is masked");
  return total / static_cast<double>(n);
}

}  // namespace hydrocast
