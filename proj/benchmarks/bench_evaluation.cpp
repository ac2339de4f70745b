#include <random>
#include <set>

#include <benchmark/benchmark.h>

#include "hydrocast/events.hpp"
#include "hydrocast/hydro_metrics.hpp"
#include "hydrocast/stats.hpp"

using namespace hydrocast;

namespace {

std::vector<std::int32_t> days(std::mt19937_64& rng, std::size_t n, std::int32_t span) {
  std::set<std::int32_t> s;
  std::uniform_int_distribution<std::int32_t> d(0, span - 1);
  while (s.size() < n) s.insert(d(rng));
  return {s.begin(), s.end()};
}

void BM_MatchEvents(benchmark::State& st) {
  std::mt19937_64 rng(4);
  const auto n = static_cast<std::size_t>(st.range(0));
  const auto a = days(rng, n, static_cast<std::int32_t>(n * 10));
  const auto b = days(rng, n, static_cast<std::int32_t>(n * 10));
  for (auto _ : st) benchmark::DoNotOptimize(match_events(a, b));
  st.SetComplexityN(st.range(0));
}

void BM_Wilcoxon(benchmark::State& st) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.1, 1.0);
  std::vector<double> d(static_cast<std::size_t>(st.range(0)));
  for (auto& v : d) v = n(rng);
  for (auto _ : st) benchmark::DoNotOptimize(wilcoxon_signed_rank(d));
}

void BM_HydroMetrics(benchmark::State& st) {
  std::mt19937_64 rng(6);
  std::gamma_distribution<double> g(2.0, 1.5);
  std::vector<double> obs(static_cast<std::size_t>(st.range(0))), sim(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    obs[i] = g(rng);
    sim[i] = 0.9 * obs[i] + 0.1 * g(rng);
  }
  for (auto _ : st) benchmark::DoNotOptimize(hydrograph_metrics(sim, obs));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}

}  // namespace

BENCHMARK(BM_MatchEvents)->RangeMultiplier(8)->Range(8, 4096)->Complexity(benchmark::oN);
BENCHMARK(BM_Wilcoxon)->Arg(12)->Arg(25)->Arg(500)->Arg(4000);
BENCHMARK(BM_HydroMetrics)->Arg(3650);
