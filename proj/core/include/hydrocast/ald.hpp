#pragma once

#include <span>

// Asymmetric Laplace distribution in the (location, scale, asymmetry)
// parameterization
//   f(y) = tau (1 - tau) / b * exp(-rho_tau((y - mu) / b)),
//   rho_tau(u) = u (tau - 1[u < 0]).
// The location is the tau-quantile; tau = 0.5 is the symmetric Laplace with
// scale 2b.
namespace hydrocast {

struct DensityParams {
  double location = 0.0;
  double scale = 1.0;
  double asymmetry = 0.5;
};

// Throws NumericError when scale <= 0, asymmetry outside (0,1) or any field
// is non-finite.
void validate(const DensityParams& p);

double ald_log_density(double y, const DensityParams& p);
double ald_cdf(double y, const DensityParams& p);
// Closed-form inverse CDF, 0 < prob < 1.
double ald_quantile(double prob, const DensityParams& p);
double ald_median(const DensityParams& p);

// Mean of -log f(y_i) over entries with mask[i] == true. Throws DataError
// ("no training signal") when every entry is masked out.
double ald_nll(std::span<const DensityParams> params, std::span<const double> targets,
               std::span<const bool> mask);

}  // namespace hydrocast
