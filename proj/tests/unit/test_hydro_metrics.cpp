#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "hydrocast/hydro_metrics.hpp"

using namespace hydrocast;

namespace {

double mean(const std::vector<double>& x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }
double pstd(const std::vector<double>& x) {
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / x.size());
}

// Second implementation written straight from the definitions.
struct Ref {
  double nse, alpha, beta_nse, kge, beta;
};

Ref reference(const std::vector<double>& s, const std::vector<double>& o) {
  const double ms = mean(s), mo = mean(o), ss = pstd(s), so = pstd(o);
  double num = 0, den = 0, cov = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    num += std::pow(s[i] - o[i], 2);
    den += std::pow(o[i] - mo, 2);
    cov += (s[i] - ms) * (o[i] - mo);
  }
  const double r = cov / s.size() / (ss * so);
  const double kge = 1 - std::sqrt(std::pow(r - 1, 2) + std::pow(ss / so - 1, 2) + std::pow(ms / mo - 1, 2));
  return {1 - num / den, ss / so, (ms - mo) / so, kge, ms / mo};
}

}  // namespace

TEST_CASE("identity gives perfect scores") {
  const std::vector<double> q{1.0, 3.0, 2.0, 8.0, 4.0};
  const auto m = hydrograph_metrics(q, q);
  CHECK(std::abs(*m.nse - 1.0) <= 1e-12);
  CHECK(std::abs(*m.kge - 1.0) <= 1e-12);
  CHECK(std::abs(*m.log_nse - 1.0) <= 1e-12);
  CHECK(std::abs(*m.log_kge - 1.0) <= 1e-12);
  CHECK(*m.alpha_nse == doctest::Approx(1.0));
  CHECK(*m.beta_kge == doctest::Approx(1.0));
  CHECK(*m.beta_nse == doctest::Approx(0.0));
}

TEST_CASE("predicting the observed mean gives NSE zero") {
  const std::vector<double> o{1.0, 3.0, 2.0, 6.0};
  const std::vector<double> s(4, 3.0);
  const auto m = hydrograph_metrics(s, o);
  CHECK(*m.nse == doctest::Approx(0.0));
  CHECK_FALSE(m.kge.has_value());  // correlation undefined for a constant simulation
}

TEST_CASE("metrics match an independent computation") {
  std::mt19937_64 rng(12);
  std::lognormal_distribution<double> ln(0.0, 1.0);
  std::normal_distribution<double> noise(1.0, 0.2);
  std::vector<double> o(300), s(300);
  for (std::size_t i = 0; i < o.size(); ++i) {
    o[i] = ln(rng);
    s[i] = o[i] * noise(rng) + 0.1;
  }
  const auto m = hydrograph_metrics(s, o);
  const auto r = reference(s, o);
  CHECK(*m.nse == doctest::Approx(r.nse).epsilon(1e-12));
  CHECK(*m.alpha_nse == doctest::Approx(r.alpha).epsilon(1e-12));
  CHECK(*m.beta_nse == doctest::Approx(r.beta_nse).epsilon(1e-12));
  CHECK(*m.kge == doctest::Approx(r.kge).epsilon(1e-12));
  CHECK(*m.beta_kge == doctest::Approx(r.beta).epsilon(1e-12));

  const double eps = 0.01 * mean(o);
  std::vector<double> ls(s.size()), lo(o.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    ls[i] = std::log(s[i] + eps);
    lo[i] = std::log(o[i] + eps);
  }
  const auto rl = reference(ls, lo);
  CHECK(*m.log_nse == doctest::Approx(rl.nse).epsilon(1e-12));
  CHECK(*m.log_kge == doctest::Approx(rl.kge).epsilon(1e-12));
  CHECK(*m.nse <= 1.0);
  CHECK(*m.kge <= 1.0);
}

TEST_CASE("missing days are dropped pairwise and order does not matter") {
  std::vector<double> o{1, 2, std::nan(""), 4, 5, 3};
  std::vector<double> s{1.1, 2.5, 3.0, std::nan(""), 4.0, 2.0};
  const auto m = hydrograph_metrics(s, o);
  CHECK(m.n == 4);
  const std::vector<double> o2{3, 5, 1, 2}, s2{2.0, 4.0, 1.1, 2.5};
  const auto p = hydrograph_metrics(s2, o2);
  CHECK(*p.nse == doctest::Approx(*m.nse).epsilon(1e-14));
  CHECK(*p.kge == doctest::Approx(*m.kge).epsilon(1e-14));
}

TEST_CASE("degenerate observations leave metrics undefined") {
  const std::vector<double> o(5, 2.0), s{1, 2, 3, 2, 2};
  const auto m = hydrograph_metrics(s, o);
  CHECK_FALSE(m.nse.has_value());
  CHECK_FALSE(m.alpha_nse.has_value());
  CHECK_FALSE(m.kge.has_value());
  CHECK(*m.beta_kge == doctest::Approx(1.0));
  const std::vector<double> zero(5, 0.0);
  const auto z = hydrograph_metrics(s, zero);
  CHECK_FALSE(z.beta_kge.has_value());
  CHECK_FALSE(z.log_nse.has_value());
  const auto empty = hydrograph_metrics(std::vector<double>{std::nan("")}, std::vector<double>{1.0});
  CHECK(empty.n == 0);
  CHECK_FALSE(empty.nse.has_value());
}
