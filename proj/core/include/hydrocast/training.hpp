#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "hydrocast/calendar.hpp"
#include "hydrocast/error.hpp"
#include "hydrocast/features.hpp"
#include "hydrocast/model.hpp"

namespace hydrocast {

// Input widths from the retained features: each dynamic feature brings a
// value column and an imputation flag.
void size_inputs(ModelConfig& config, const FeatureTransform& transform);

// One training example: a basin and the day index of the forecast issue date.
struct SampleRef {
  std::uint32_t basin = 0;
  std::uint32_t issue = 0;
};

// (basin, issue date) pairs whose whole window [issue - T, issue + 7] lies
// inside one of `periods` (anywhere in the record when empty) and which have
// at least one observed target.
std::vector<SampleRef> enumerate_samples(std::span<const PreparedBasin> basins, const ModelConfig& config,
                                         std::span<const DateRange> periods = {});

Batch assemble_batch(std::span<const PreparedBasin> basins, std::span<const SampleRef> samples,
                     const ModelConfig& config);

// Mean NLL of `state` over the given samples, evaluated in chunks.
double evaluate_nll(const ForecastModelState& state, const ModelConfig& config,
                    std::span<const PreparedBasin> basins, std::span<const SampleRef> samples);

struct TrainingTrace {
  std::vector<double> loss;  // per step
  std::vector<std::pair<std::size_t, double>> validation;
};

struct TrainResult {
  ForecastModelState state;
  TrainingTrace trace;
};

struct TrainOptions {
  std::span<const SampleRef> validation;  // empty: no validation
  // Called after each step with (step, loss).
  std::function<void(std::size_t, double)> on_step;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(std::size_t step, double last_finite_loss);
  std::size_t step() const { return step_; }
  double last_finite_loss() const { return last_finite_loss_; }

 private:
  std::size_t step_;
  double last_finite_loss_;
};

// Adam with cosine-decayed learning rate and global-norm gradient clipping.
// Minibatches are drawn uniformly from `samples` with an RNG seeded by `seed`.
TrainResult train(std::span<const PreparedBasin> basins, std::span<const SampleRef> samples,
                  const ModelConfig& config, std::uint64_t seed, const TrainOptions& options = {});

}  // namespace hydrocast
