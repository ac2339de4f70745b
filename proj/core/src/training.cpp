#include "hydrocast/training.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace hydrocast {

void size_inputs(ModelConfig& config, const FeatureTransform& transform) {
  config.hindcast_dynamic = 2 * transform.schema.hindcast_features.size();
  config.forecast_dynamic = 2 * transform.schema.forecast_features.size();
  config.static_inputs = transform.schema.static_features.size();
}

TrainingDiverged::TrainingDiverged(std::size_t step, double last_finite_loss)
    : Error("training_diverged", "loss became non-finite at step " + std::to_string(step) +
                                     " (last finite loss " + std::to_string(last_finite_loss) + ")"),
      step_(step),
      last_finite_loss_(last_finite_loss) {}

std::vector<SampleRef> enumerate_samples(std::span<const PreparedBasin> basins, const ModelConfig& config,
                                         std::span<const DateRange> periods) {
  const auto hind = static_cast<std::int32_t>(config.hindcast_length);
  const auto tail = static_cast<std::int32_t>(ModelConfig::kHorizon - 1);
  std::vector<SampleRef> out;
  for (std::uint32_t b = 0; b < basins.size(); ++b) {
    const PreparedBasin& basin = basins[b];
    for (std::size_t t = config.hindcast_length; t + ModelConfig::kHorizon <= basin.num_days; ++t) {
      const Date issue = basin.start + static_cast<std::int32_t>(t);
      const DateRange window{issue - hind, issue + tail};
      if (!periods.empty() &&
          std::none_of(periods.begin(), periods.end(), [&](const DateRange& r) { return r.contains(window); })) {
        continue;
      }
      bool observed = false;
      for (std::size_t lead = 0; lead < ModelConfig::kHorizon; ++lead) {
        observed = observed || !std::isnan(basin.target[t + lead]);
      }
      if (observed) out.push_back(SampleRef{b, static_cast<std::uint32_t>(t)});
    }
  }
  return out;
}

Batch assemble_batch(std::span<const PreparedBasin> basins, std::span<const SampleRef> samples,
                     const ModelConfig& c) {
  Batch batch;
  const std::size_t b = samples.size();
  batch.size = b;
  const std::size_t fe = c.encoder_inputs();
  const std::size_t fd = c.decoder_inputs();
  batch.hindcast.assign(c.hindcast_length * b * fe, 0.0);
  batch.forecast.assign(ModelConfig::kHorizon * b * fd, 0.0);
  batch.targets.assign(ModelConfig::kHorizon * b, 0.0);
  batch.mask.assign(ModelConfig::kHorizon * b, 0.0);
  for (std::size_t k = 0; k < b; ++k) {
    const PreparedBasin& basin = basins[samples[k].basin];
    const std::size_t issue = samples[k].issue;
    if (basin.hindcast.cols != c.hindcast_dynamic || basin.forecast.cols != c.forecast_dynamic ||
        basin.statics.size() != c.static_inputs) {
      throw ShapeError("basin " + basin.gauge_id + " inputs do not match the model configuration");
    }
    for (std::size_t t = 0; t < c.hindcast_length; ++t) {
      const auto src = basin.hindcast.row(issue - c.hindcast_length + t);
      double* dst = batch.hindcast.data() + (t * b + k) * fe;
      std::copy(src.begin(), src.end(), dst);
      std::copy(basin.statics.begin(), basin.statics.end(), dst + src.size());
    }
    for (std::size_t lead = 0; lead < ModelConfig::kHorizon; ++lead) {
      const auto src = basin.forecast.row(issue + lead);
      double* dst = batch.forecast.data() + (lead * b + k) * fd;
      std::copy(src.begin(), src.end(), dst);
      if (c.statics_in_decoder) std::copy(basin.statics.begin(), basin.statics.end(), dst + src.size());
      const double y = basin.target[issue + lead];
      if (!std::isnan(y)) {
        batch.targets[lead * b + k] = y;
        batch.mask[lead * b + k] = 1.0;
      }
    }
  }
  return batch;
}

namespace {

std::size_t count_mask(const Batch& batch) {
  return static_cast<std::size_t>(std::count(batch.mask.begin(), batch.mask.end(), 1.0));
}

double batch_loss(ForecastModelState& state, const ModelConfig& c, const Batch& batch, bool with_grad) {
  ad::Graph g;
  const auto p = graph::bind(g, state, with_grad);
  const auto d = graph::forward(g, p, c, batch);
  const ad::Shape col{ModelConfig::kHorizon * batch.size, 1};
  ad::Var loss = graph::nll(d, g.constant(col, batch.targets), g.constant(col, batch.mask), count_mask(batch));
  if (with_grad) g.backward(loss);
  return loss.scalar();
}

}  // namespace

double evaluate_nll(const ForecastModelState& state, const ModelConfig& config,
                    std::span<const PreparedBasin> basins, std::span<const SampleRef> samples) {
  constexpr std::size_t kChunk = 256;
  auto& s = const_cast<ForecastModelState&>(state);
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < samples.size(); i += kChunk) {
    const auto chunk = samples.subspan(i, std::min(kChunk, samples.size() - i));
    const Batch batch = assemble_batch(basins, chunk, config);
    const std::size_t m = count_mask(batch);
    if (m == 0) continue;
    total += batch_loss(s, config, batch, false) * static_cast<double>(m);
    n += m;
  }
  if (n == 0) throw DataError("no training signal: every target is masked");
  return total / static_cast<double>(n);
}

TrainResult train(std::span<const PreparedBasin> basins, std::span<const SampleRef> samples,
                  const ModelConfig& config, std::uint64_t seed, const TrainOptions& options) {
  config.validate();
  if (samples.empty()) throw DataError("train: no valid (gauge, issue date) samples");
  TrainResult result;
  result.state = ForecastModelState::initialize(config, seed);
  auto params = result.state.named();

  std::vector<std::vector<double>> m1(params.size()), m2(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m1[i].assign(params[i].second->values.size(), 0.0);
    m2[i].assign(params[i].second->values.size(), 0.0);
  }
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  // Separate stream from the initializer so batch order does not depend on
  // parameter count.
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::vector<SampleRef> chosen(config.batch_size);
  double last_finite = std::nan("");

  for (std::size_t step = 0; step < config.training_steps; ++step) {
    for (auto& s : chosen) s = samples[pick(rng)];
    const Batch batch = assemble_batch(basins, chosen, config);
    if (count_mask(batch) == 0) continue;
    const double loss = batch_loss(result.state, config, batch, true);
    if (!std::isfinite(loss)) throw TrainingDiverged(step, last_finite);
    last_finite = loss;
    result.trace.loss.push_back(loss);

    double norm2 = 0.0;
    for (const auto& [name, t] : params) {
      for (double gv : t->grad) norm2 += gv * gv;
    }
    const double norm = std::sqrt(norm2);
    const double clip = norm > config.grad_clip_norm ? config.grad_clip_norm / norm : 1.0;

    double lr = config.learning_rate;
    if (config.cosine_decay && config.training_steps > 1) {
      lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) /
                                  static_cast<double>(config.training_steps)));
    }
    const double t1 = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(kBeta1, t1);
    const double bc2 = 1.0 - std::pow(kBeta2, t1);
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& values = params[i].second->values;
      const auto& grad = params[i].second->grad;
      for (std::size_t j = 0; j < values.size(); ++j) {
        const double gj = grad[j] * clip;
        m1[i][j] = kBeta1 * m1[i][j] + (1.0 - kBeta1) * gj;
        m2[i][j] = kBeta2 * m2[i][j] + (1.0 - kBeta2) * gj * gj;
        values[j] -= lr * (m1[i][j] / bc1) / (std::sqrt(m2[i][j] / bc2) + kEps);
      }
    }
    if (!result.state.all_finite()) throw TrainingDiverged(step, last_finite);

    if (!options.validation.empty() && config.validate_every > 0 && (step + 1) % config.validate_every == 0) {
      result.trace.validation.emplace_back(step + 1,
                                           evaluate_nll(result.state, config, basins, options.validation));
    }
    if (options.on_step) options.on_step(step, loss);
  }
  for (auto& [name, t] : params) t->grad.clear();
  return result;
}

}  // namespace hydrocast
