#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "hydrocast/error.hpp"
#include "hydrocast/stats.hpp"

using namespace hydrocast;

namespace {

// Two-sided p by walking all 2^n sign patterns over the mid-ranks.
double enumerate_p(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0) d.push_back(x);
  }
  const std::size_t n = d.size();
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0, equal = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) ++less;
      if (std::abs(d[j]) == std::abs(d[i])) ++equal;
    }
    ranks[i] = less + (equal + 1) / 2;
  }
  double w = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] > 0) w += ranks[i];
  }
  double le = 0, ge = 0;
  const std::uint64_t patterns = 1ULL << n;
  for (std::uint64_t m = 0; m < patterns; ++m) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (m >> i & 1) s += ranks[i];
    }
    if (s <= w + 1e-9) ++le;
    if (s >= w - 1e-9) ++ge;
  }
  return std::min(1.0, 2 * std::min(le, ge) / static_cast<double>(patterns));
}

}  // namespace

TEST_CASE("all-positive five differences give p = 2/32") {
  const std::vector<double> d{1, 2, 3, 4, 5};
  const auto r = wilcoxon_signed_rank(d);
  CHECK(r.exact);
  CHECK(r.p_value == 0.0625);
  CHECK(r.w_plus == 15.0);
}

TEST_CASE("antisymmetric differences give p = 1") {
  const std::vector<double> d{-1, 1, -2, 2};
  CHECK(wilcoxon_signed_rank(d).p_value == 1.0);
  CHECK(wilcoxon_signed_rank(d, WilcoxonMethod::normal).p_value == 1.0);
}

TEST_CASE("all-zero differences are degenerate") {
  const std::vector<double> d{0, 0, 0};
  const auto r = wilcoxon_signed_rank(d);
  CHECK(r.degenerate);
  CHECK(r.p_value == 1.0);
  CHECK_THROWS_AS(wilcoxon_signed_rank(std::vector<double>{}), ValidationError);
}

TEST_CASE("exact p matches sign-pattern enumeration, including ties and zeros") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> v(-4, 6);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> d(1 + trial % 14);
    for (auto& x : d) x = v(rng) / 2.0;
    bool any = std::any_of(d.begin(), d.end(), [](double x) { return x != 0; });
    if (!any) continue;
    const auto r = wilcoxon_signed_rank(d, WilcoxonMethod::exact);
    CHECK(r.p_value == doctest::Approx(enumerate_p(d)).epsilon(1e-12));
    CHECK(r.p_value > 0.0);
    CHECK(r.p_value <= 1.0);
  }
}

TEST_CASE("normal approximation tracks the exact distribution at n = 50") {
  // Relative agreement is checked where p >= 0.05; deeper in the tail the
  // approximation is only held to an absolute bound.
  std::mt19937_64 rng(8);
  int compared = 0;
  for (double shift : {0.0, 0.1, 0.2, 0.3, 0.45}) {
    std::normal_distribution<double> n(shift, 1.0);
    for (int trial = 0; trial < 8; ++trial) {
      std::vector<double> d(50);
      for (auto& x : d) x = n(rng);
      const double exact = wilcoxon_signed_rank(d, WilcoxonMethod::exact).p_value;
      const auto approx = wilcoxon_signed_rank(d);
      CHECK_FALSE(approx.exact);
      CHECK(std::abs(approx.p_value - exact) <= 5e-3);
      if (exact >= 0.05) {
        ++compared;
        CHECK(std::abs(approx.p_value - exact) <= 0.05 * exact);
      }
    }
  }
  CHECK(compared >= 15);
}

TEST_CASE("Cohen's d") {
  const std::vector<double> d{1, 1, 1, 3};
  CHECK(*cohens_d(d).d == 1.5);
  std::vector<double> neg(d);
  for (auto& x : neg) x = -x;
  CHECK(*cohens_d(neg).d == -1.5);
  const std::vector<double> flat{0.2, 0.2, 0.2};
  CHECK(cohens_d(flat).degenerate);
  CHECK_FALSE(cohens_d(flat).d.has_value());
  CHECK_THROWS_AS(cohens_d(std::vector<double>{1.0}), ValidationError);
}

TEST_CASE("Cohen's d negates exactly when operands swap") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<GaugeScore> a, b;
  for (int i = 0; i < 40; ++i) {
    a.push_back({"g" + std::to_string(i), "eu", 2.0, 0, n(rng)});
    b.push_back({"g" + std::to_string(i), "eu", 2.0, 0, n(rng)});
  }
  const auto ab = compare_models(a, b, "f1", Grouping::all);
  const auto ba = compare_models(b, a, "f1", Grouping::all);
  CHECK(*ab.groups[0].effect.d == -*ba.groups[0].effect.d);
  CHECK(ab.groups[0].wilcoxon.p_value == ba.groups[0].wilcoxon.p_value);
}

TEST_CASE("identical score sets") {
  std::vector<GaugeScore> a;
  for (int i = 0; i < 10; ++i) a.push_back({"g" + std::to_string(i), "eu", 2.0, 0, 0.1 * i});
  const auto c = compare_models(a, a, "f1", Grouping::all);
  REQUIRE(c.groups.size() == 1);
  CHECK(c.groups[0].fraction_at_least == 1.0);
  CHECK(c.groups[0].fraction_better == 0.0);
  CHECK(c.groups[0].wilcoxon.degenerate);
  CHECK(c.groups[0].effect.degenerate);
}

TEST_CASE("a uniformly better model") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GaugeScore> a, b;
  for (int i = 0; i < 30; ++i) {
    const double v = u(rng);
    a.push_back({"g" + std::to_string(i), "eu", 2.0, 0, v});
    // A small jitter keeps sd(diff) away from zero so that d is finite.
    b.push_back({"g" + std::to_string(i), "eu", 2.0, 0, v - 0.1 - 1e-3 * u(rng)});
  }
  const auto c = compare_models(a, b, "f1", Grouping::all);
  REQUIRE(c.groups.size() == 1);
  const auto& g = c.groups[0];
  CHECK(g.n == 30);
  CHECK(g.fraction_better == 1.0);
  CHECK(g.wilcoxon.p_value < 1e-5);
  CHECK(*g.effect.d > 50.0);
}

TEST_CASE("grouping, undefined pairs and empty groups") {
  std::vector<GaugeScore> a{{"g1", "eu", 2.0, 0, 0.5},   {"g1", "eu", 2.0, 1, 0.4},     {"g2", "af", 2.0, 0, 0.9},
                            {"g3", "as", 2.0, 0, 0.3},   {"g4", "eu", 5.0, 0, std::nullopt}};
  std::vector<GaugeScore> b{{"g1", "eu", 2.0, 0, 0.5},   {"g1", "eu", 2.0, 1, 0.6},     {"g2", "af", 2.0, 0, 0.1},
                            {"g3", "as", 2.0, 0, std::nullopt}, {"g4", "eu", 5.0, 0, 0.2}};
  const auto by_lead = compare_models(a, b, "f1", Grouping::lead);
  REQUIRE(by_lead.groups.size() == 2);
  CHECK(by_lead.groups[0].group == "0");
  CHECK(by_lead.groups[0].n == 2);
  CHECK(by_lead.groups[1].n == 1);
  const auto by_continent = compare_models(a, b, "f1", Grouping::continent);
  CHECK(by_continent.groups.size() == 2);  // "as" has no defined pair
  CHECK(std::any_of(by_continent.notes.begin(), by_continent.notes.end(),
                    [](const std::string& s) { return s.find("'as' omitted") != std::string::npos; }));
  const auto by_t = compare_models(a, b, "f1", Grouping::return_period);
  REQUIRE(by_t.groups.size() == 1);
  CHECK(by_t.groups[0].group == "2");
  const std::vector<ComparisonSet> sets{by_lead};
  CHECK(comparison_json(sets).find("\"fraction_at_least\"") != std::string::npos);
}

TEST_CASE("ties within the band count as at least equivalent") {
  std::vector<GaugeScore> a{{"g1", "", 2, 0, 0.5 + 5e-10}, {"g2", "", 2, 0, 0.4}};
  std::vector<GaugeScore> b{{"g1", "", 2, 0, 0.5}, {"g2", "", 2, 0, 0.4 + 5e-10}};
  const auto c = compare_models(a, b, "f1", Grouping::all);
  CHECK(c.groups[0].fraction_better == 0.0);
  CHECK(c.groups[0].fraction_at_least == 1.0);
}

TEST_CASE("box statistics use type-7 quartiles and 1.5 IQR whiskers") {
  const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 40};
  const auto b = box_stats(v);
  CHECK(b.q1 == doctest::Approx(3.25));
  CHECK(b.median == doctest::Approx(5.5));
  CHECK(b.q3 == doctest::Approx(7.75));
  CHECK(b.whisker_low == 1.0);
  CHECK(b.whisker_high == 9.0);
  CHECK(b.outliers == std::vector<double>{40.0});
}
