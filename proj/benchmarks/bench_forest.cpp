#include <random>

#include <benchmark/benchmark.h>

#include "hydrocast/forest.hpp"

using namespace hydrocast;

namespace {

struct Data {
  Matrix x;
  std::vector<double> y;
  std::vector<std::string> names;
};

Data make(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  Data d{Matrix(rows, cols, 0.0), std::vector<double>(rows), {}};
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) d.x(i, j) = u(rng);
    d.y[i] = d.x(i, 0) + 0.3 * u(rng) > 0.65 ? 1.0 : 0.0;
  }
  for (std::size_t j = 0; j < cols; ++j) d.names.push_back("a" + std::to_string(j));
  return d;
}

void BM_FitForest(benchmark::State& st) {
  const auto d = make(static_cast<std::size_t>(st.range(0)), 40);
  ForestConfig c;
  c.n_trees = 100;
  for (auto _ : st) benchmark::DoNotOptimize(fit_forest(d.x, d.y, d.names, c, 1));
}

void BM_PredictForest(benchmark::State& st) {
  const auto d = make(2000, 40);
  ForestConfig c;
  c.n_trees = 100;
  const auto f = fit_forest(d.x, d.y, d.names, c, 1);
  std::size_t i = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(f.predict_class(d.x.row(i)));
    i = (i + 1) % d.x.rows;
  }
}

}  // namespace

BENCHMARK(BM_FitForest)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictForest);
