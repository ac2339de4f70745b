#include <cmath>
#include <vector>

#include "doctest.h"
#include "hydrocast/ald.hpp"
#include "hydrocast/error.hpp"

using namespace hydrocast;

namespace {

double density(double y, double mu, double b, double tau) {
  const double u = (y - mu) / b;
  return tau * (1 - tau) / b * std::exp(-u * (tau - (u < 0 ? 1.0 : 0.0)));
}

double simpson(double a, double c, int n, double mu, double b, double tau) {
  const double h = (c - a) / n;
  double s = density(a, mu, b, tau) + density(c, mu, b, tau);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * density(a + i * h, mu, b, tau);
  return s * h / 3;
}

}  // namespace

TEST_CASE("density integrates to one and the location is the tau-quantile") {
  for (double tau : {0.1, 0.5, 0.8}) {
    const double mu = 0.3, b = 0.7;
    const double below = simpson(mu - 60 * b / (1 - tau), mu, 20000, mu, b, tau);
    const double above = simpson(mu, mu + 60 * b / tau, 20000, mu, b, tau);
    CHECK(below + above == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(below == doctest::Approx(tau).epsilon(1e-9));
    CHECK(ald_cdf(mu, {mu, b, tau}) == doctest::Approx(tau).epsilon(1e-15));
  }
}

TEST_CASE("log density matches the closed form") {
  const DensityParams p{1.0, 2.0, 0.3};
  for (double y : {-3.0, 0.5, 1.0, 4.0}) {
    CHECK(ald_log_density(y, p) == doctest::Approx(std::log(density(y, 1.0, 2.0, 0.3))).epsilon(1e-14));
  }
}

TEST_CASE("quantile inverts the CDF on both branches") {
  const DensityParams p{-0.4, 1.3, 0.27};
  for (double q : {0.01, 0.2, 0.27, 0.5, 0.9, 0.999}) {
    CHECK(ald_cdf(ald_quantile(q, p), p) == doctest::Approx(q).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ald_quantile(0.0, p), ValidationError);
  CHECK_THROWS_AS(ald_quantile(1.0, p), ValidationError);
}

TEST_CASE("symmetric case has median at the location") {
  CHECK(ald_median({2.5, 0.8, 0.5}) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(ald_median({0.0, 1.0, 0.2}) > 0.0);
  CHECK(ald_median({0.0, 1.0, 0.8}) < 0.0);
}

TEST_CASE("NLL at the mode of the symmetric unit density is -ln 0.25") {
  const std::vector<DensityParams> p{{0.7, 1.0, 0.5}};
  const std::vector<double> y{0.7};
  const bool mask[] = {true};
  CHECK(std::abs(ald_nll(p, y, mask) + std::log(0.25)) <= 1e-12);
}

TEST_CASE("NLL averages unmasked entries only") {
  const std::vector<DensityParams> p{{0.0, 1.0, 0.5}, {0.0, 1.0, 0.3}, {1.0, 2.0, 0.6}};
  const std::vector<double> y{0.4, 9.0, -1.0};
  const bool mask[] = {true, false, true};
  const double expected = -(std::log(density(0.4, 0.0, 1.0, 0.5)) + std::log(density(-1.0, 1.0, 2.0, 0.6))) / 2;
  CHECK(ald_nll(p, y, mask) == doctest::Approx(expected).epsilon(1e-14));
  const bool none[] = {false, false, false};
  CHECK_THROWS_AS(ald_nll(p, y, none), DataError);
}

TEST_CASE("invalid parameters are rejected") {
  CHECK_THROWS_AS(validate({0.0, 0.0, 0.5}), NumericError);
  CHECK_THROWS_AS(validate({0.0, 1.0, 1.0}), NumericError);
  CHECK_THROWS_AS(validate({std::nan(""), 1.0, 0.5}), NumericError);
}
