#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hydrocast/ald.hpp"
#include "hydrocast/autodiff.hpp"
#include "hydrocast/matrix.hpp"

namespace hydrocast {

struct ModelConfig {
  static constexpr std::size_t kHorizon = 8;  // leads 0..7

  std::size_t hindcast_length = 365;
  std::size_t hidden_size = 256;
  std::size_t batch_size = 256;
  std::size_t training_steps = 50000;
  double learning_rate = 1e-3;
  bool cosine_decay = true;
  double grad_clip_norm = 1.0;
  std::size_t validate_every = 1000;
  std::size_t ensemble_size = 3;
  bool statics_in_decoder = true;
  bool per_lead_heads = false;
  double initial_forget_bias = 3.0;

  // Input widths, filled in from the feature transform.
  std::size_t hindcast_dynamic = 0;  // features + flags
  std::size_t forecast_dynamic = 0;  // features + flags
  std::size_t static_inputs = 0;

  std::size_t encoder_inputs() const { return hindcast_dynamic + static_inputs; }
  std::size_t decoder_inputs() const { return forecast_dynamic + (statics_in_decoder ? static_inputs : 0); }

  static ModelConfig full_scale();
  // hidden 32, batch 16, 2,000 steps.
  static ModelConfig desk_scale();
  void validate() const;
};

// Gate blocks in every LSTM weight matrix are ordered [input | forget | cell | output].
struct ForecastModelState {
  ad::Tensor encoder_input_weights;   // [encoder_inputs x 4H]
  ad::Tensor encoder_hidden_weights;  // [H x 4H]
  ad::Tensor encoder_bias;            // [4H]
  ad::Tensor decoder_input_weights;
  ad::Tensor decoder_hidden_weights;
  ad::Tensor decoder_bias;
  ad::Tensor cell_transfer_weights;   // [H x H], affine
  ad::Tensor cell_transfer_bias;
  ad::Tensor hidden_transfer_weights;  // [H x H], followed by tanh
  ad::Tensor hidden_transfer_bias;
  ad::Tensor head_weights;  // [H x 3] or [H x 3*8] with per-lead heads
  ad::Tensor head_bias;

  static ForecastModelState initialize(const ModelConfig& config, std::uint64_t seed);
  static ForecastModelState zeros(const ModelConfig& config);

  std::vector<std::pair<std::string, ad::Tensor*>> named();
  std::vector<std::pair<std::string, const ad::Tensor*>> named() const;
  bool all_finite() const;
  std::size_t parameter_count() const;
};

// Batch tensors laid out time-major: row (t * batch + b).
struct Batch {
  std::size_t size = 0;
  std::vector<double> hindcast;  // [(T*B) x encoder_inputs]
  std::vector<double> forecast;  // [(8*B) x decoder_inputs]
  std::vector<double> targets;   // [8*B]
  std::vector<double> mask;      // [8*B], 1 = target present
};

namespace graph {

struct Parameters {
  ad::Var enc_wx, enc_wh, enc_b, dec_wx, dec_wh, dec_b, cell_w, cell_b, hid_w, hid_b, head_w, head_b;
};

struct LstmState {
  ad::Var cell;
  ad::Var hidden;
};

struct Density {
  ad::Var location;   // [(8*B) x 1]
  ad::Var scale;
  ad::Var asymmetry;
};

// `trainable` binds tensors as gradient leaves; otherwise as constants.
Parameters bind(ad::Graph& g, ForecastModelState& state, bool trainable);
LstmState encode(const Parameters& p, ad::Var inputs, std::size_t steps, std::size_t batch, std::size_t hidden);
LstmState transfer(const Parameters& p, const LstmState& encoder);
Density decode(const Parameters& p, const LstmState& initial, ad::Var inputs, std::size_t batch,
               std::size_t hidden, bool per_lead_heads);
Density forward(ad::Graph& g, const Parameters& p, const ModelConfig& config, const Batch& batch);
// Masked mean ALD negative log-likelihood.
ad::Var nll(const Density& d, ad::Var targets, ad::Var mask, std::size_t unmasked);

}  // namespace graph

inline constexpr double kScaleFloor = 1e-6;
inline constexpr double kAsymmetryMin = 1e-4;
inline constexpr double kAsymmetryMax = 1.0 - 1e-4;

// Single-sequence API. `hindcast` is [T x hindcast_dynamic]; statics are
// appended to every row. Throws NumericError on NaN inputs.
std::pair<std::vector<double>, std::vector<double>> run_encoder(const ForecastModelState& state,
                                                                const ModelConfig& config,
                                                                const Matrix& hindcast,
                                                                std::span<const double> statics);
std::pair<std::vector<double>, std::vector<double>> transfer_state(const ForecastModelState& state,
                                                                   std::span<const double> cell,
                                                                   std::span<const double> hidden);
// `forecast` is [8 x forecast_dynamic]. Throws NumericError naming the lead
// when a density parameter is non-finite.
std::array<DensityParams, ModelConfig::kHorizon> run_decoder(const ForecastModelState& state,
                                                             const ModelConfig& config,
                                                             std::span<const double> cell,
                                                             std::span<const double> hidden,
                                                             const Matrix& forecast,
                                                             std::span<const double> statics);

// Mean NLL over unmasked (timestep, lead) pairs; DataError when all masked.
double nll_loss(std::span<const DensityParams> params, std::span<const double> targets,
                std::span<const bool> mask);

}  // namespace hydrocast
