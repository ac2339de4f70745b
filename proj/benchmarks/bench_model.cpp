#include <random>

#include <benchmark/benchmark.h>

#include "hydrocast/autodiff.hpp"
#include "hydrocast/model.hpp"

using namespace hydrocast;

namespace {

ModelConfig config_for(std::size_t hidden, std::size_t hindcast) {
  ModelConfig c = ModelConfig::desk_scale();
  c.hidden_size = hidden;
  c.hindcast_length = hindcast;
  c.hindcast_dynamic = 6;
  c.forecast_dynamic = 2;
  c.static_inputs = 4;
  return c;
}

Batch random_batch(const ModelConfig& c, std::size_t size) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  Batch b;
  b.size = size;
  b.hindcast.resize(c.hindcast_length * size * c.encoder_inputs());
  b.forecast.resize(ModelConfig::kHorizon * size * c.decoder_inputs());
  for (auto& v : b.hindcast) v = n(rng);
  for (auto& v : b.forecast) v = n(rng);
  b.targets.resize(ModelConfig::kHorizon * size);
  for (auto& v : b.targets) v = n(rng);
  b.mask.assign(b.targets.size(), 1.0);
  return b;
}

void run(benchmark::State& st, bool backward) {
  const auto cfg = config_for(static_cast<std::size_t>(st.range(0)), static_cast<std::size_t>(st.range(1)));
  auto state = ForecastModelState::initialize(cfg, 3);
  const auto batch = random_batch(cfg, cfg.batch_size);
  const std::size_t n = batch.targets.size();
  for (auto _ : st) {
    ad::Graph g;
    const auto p = graph::bind(g, state, backward);
    const auto d = graph::forward(g, p, cfg, batch);
    auto loss = graph::nll(d, g.constant(ad::Shape{n, 1}, batch.targets), g.constant(ad::Shape{n, 1}, batch.mask), n);
    if (backward) g.backward(loss);
    benchmark::DoNotOptimize(loss.scalar());
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(cfg.batch_size));
}

void BM_Forward(benchmark::State& st) { run(st, false); }
void BM_ForwardBackward(benchmark::State& st) { run(st, true); }

}  // namespace

BENCHMARK(BM_Forward)->Args({32, 365})->Args({64, 365})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForwardBackward)->Args({32, 90})->Args({32, 365})->Args({64, 365})->Unit(benchmark::kMillisecond);
