#include "hydrocast/model.hpp"

#include <cmath>
#include <random>

#include "hydrocast/error.hpp"

namespace hydrocast {

using ad::Shape;
using ad::Tensor;
using ad::Var;

// ---------------------------------------------------------------- config

ModelConfig ModelConfig::full_scale() { return ModelConfig{}; }

ModelConfig ModelConfig::desk_scale() {
  ModelConfig c;
  c.hidden_size = 32;
  c.batch_size = 16;
  c.training_steps = 2000;
  c.validate_every = 250;
  return c;
}

void ModelConfig::validate() const {
  if (hindcast_length < 1) throw ValidationError("hindcast_length must be >= 1");
  if (hidden_size < 1) throw ValidationError("hidden_size must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (ensemble_size < 1) throw ValidationError("ensemble_size must be >= 1");
  if (!(learning_rate >= 0.0)) throw ValidationError("learning_rate must be >= 0");
  if (!(grad_clip_norm > 0.0)) throw ValidationError("grad_clip_norm must be > 0");
  if (encoder_inputs() == 0) throw ValidationError("encoder has no inputs");
  if (decoder_inputs() == 0) throw ValidationError("decoder has no inputs");
}

// ---------------------------------------------------------------- state

namespace {

std::size_t head_outputs(const ModelConfig& c) { return 3 * (c.per_lead_heads ? ModelConfig::kHorizon : 1); }

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(shape.size());
  for (double& x : v) x = dist(rng);
  return Tensor(shape, std::move(v));
}

void set_forget_bias(Tensor& bias, std::size_t hidden, double value) {
  for (std::size_t j = hidden; j < 2 * hidden; ++j) bias.values[j] = value;
}

}  // namespace

ForecastModelState ForecastModelState::initialize(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  const std::size_t h = c.hidden_size;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  ForecastModelState s;
  s.encoder_input_weights = uniform(Shape{c.encoder_inputs(), 4 * h}, bound, rng);
  s.encoder_hidden_weights = uniform(Shape{h, 4 * h}, bound, rng);
  s.encoder_bias = uniform(Shape{4 * h}, bound, rng);
  set_forget_bias(s.encoder_bias, h, c.initial_forget_bias);
  s.decoder_input_weights = uniform(Shape{c.decoder_inputs(), 4 * h}, bound, rng);
  s.decoder_hidden_weights = uniform(Shape{h, 4 * h}, bound, rng);
  s.decoder_bias = uniform(Shape{4 * h}, bound, rng);
  set_forget_bias(s.decoder_bias, h, c.initial_forget_bias);
  s.cell_transfer_weights = uniform(Shape{h, h}, bound, rng);
  s.cell_transfer_bias = uniform(Shape{h}, bound, rng);
  s.hidden_transfer_weights = uniform(Shape{h, h}, bound, rng);
  s.hidden_transfer_bias = uniform(Shape{h}, bound, rng);
  s.head_weights = uniform(Shape{h, head_outputs(c)}, bound, rng);
  s.head_bias = Tensor::zeros(Shape{head_outputs(c)});
  return s;
}

ForecastModelState ForecastModelState::zeros(const ModelConfig& c) {
  c.validate();
  const std::size_t h = c.hidden_size;
  ForecastModelState s;
  s.encoder_input_weights = Tensor::zeros(Shape{c.encoder_inputs(), 4 * h});
  s.encoder_hidden_weights = Tensor::zeros(Shape{h, 4 * h});
  s.encoder_bias = Tensor::zeros(Shape{4 * h});
  s.decoder_input_weights = Tensor::zeros(Shape{c.decoder_inputs(), 4 * h});
  s.decoder_hidden_weights = Tensor::zeros(Shape{h, 4 * h});
  s.decoder_bias = Tensor::zeros(Shape{4 * h});
  s.cell_transfer_weights = Tensor::zeros(Shape{h, h});
  s.cell_transfer_bias = Tensor::zeros(Shape{h});
  s.hidden_transfer_weights = Tensor::zeros(Shape{h, h});
  s.hidden_transfer_bias = Tensor::zeros(Shape{h});
  s.head_weights = Tensor::zeros(Shape{h, head_outputs(c)});
  s.head_bias = Tensor::zeros(Shape{head_outputs(c)});
  return s;
}

std::vector<std::pair<std::string, Tensor*>> ForecastModelState::named() {
  return {{"encoder.input_weights", &encoder_input_weights},
          {"encoder.hidden_weights", &encoder_hidden_weights},
          {"encoder.bias", &encoder_bias},
          {"decoder.input_weights", &decoder_input_weights},
          {"decoder.hidden_weights", &decoder_hidden_weights},
          {"decoder.bias", &decoder_bias},
          {"transfer.cell.weights", &cell_transfer_weights},
          {"transfer.cell.bias", &cell_transfer_bias},
          {"transfer.hidden.weights", &hidden_transfer_weights},
          {"transfer.hidden.bias", &hidden_transfer_bias},
          {"head.weights", &head_weights},
          {"head.bias", &head_bias}};
}

std::vector<std::pair<std::string, const Tensor*>> ForecastModelState::named() const {
  auto mut = const_cast<ForecastModelState*>(this)->named();
  std::vector<std::pair<std::string, const Tensor*>> out;
  for (auto& [n, t] : mut) out.emplace_back(n, t);
  return out;
}

bool ForecastModelState::all_finite() const {
  for (const auto& [name, t] : named()) {
    for (double v : t->values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

std::size_t ForecastModelState::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->values.size();
  return n;
}

// ---------------------------------------------------------------- graph

namespace graph {

Parameters bind(ad::Graph& g, ForecastModelState& s, bool trainable) {
  auto b = [&](Tensor& t) { return trainable ? g.parameter(t) : g.constant(t); };
  return Parameters{b(s.encoder_input_weights), b(s.encoder_hidden_weights), b(s.encoder_bias),
                    b(s.decoder_input_weights), b(s.decoder_hidden_weights), b(s.decoder_bias),
                    b(s.cell_transfer_weights), b(s.cell_transfer_bias),   b(s.hidden_transfer_weights),
                    b(s.hidden_transfer_bias),  b(s.head_weights),          b(s.head_bias)};
}

namespace {

// One LSTM recurrence given the precomputed input projection (bias included).
LstmState lstm_step(Var projected, const LstmState& prev, Var wh, std::size_t hidden, bool first) {
  Var z = first ? projected : ad::add(projected, ad::matmul(prev.hidden, wh));
  Var state = ad::lstm_cell(z, first ? Var{} : prev.cell);
  return {ad::slice_cols(state, 0, hidden), ad::slice_cols(state, hidden, 2 * hidden)};
}

LstmState run_lstm(Var inputs, Var wx, Var wh, Var bias, std::size_t steps, std::size_t batch,
                   std::size_t hidden, const LstmState* initial, std::vector<Var>* outputs) {
  Var projected = ad::add_row(ad::matmul(inputs, wx), bias);
  LstmState state{};
  bool first = initial == nullptr;
  if (initial != nullptr) state = *initial;
  for (std::size_t t = 0; t < steps; ++t) {
    Var x = steps == 1 ? projected : ad::slice_rows(projected, t * batch, (t + 1) * batch);
    state = lstm_step(x, state, wh, hidden, first);
    first = false;
    if (outputs != nullptr) outputs->push_back(state.hidden);
  }
  return state;
}

}  // namespace

LstmState encode(const Parameters& p, Var inputs, std::size_t steps, std::size_t batch, std::size_t hidden) {
  return run_lstm(inputs, p.enc_wx, p.enc_wh, p.enc_b, steps, batch, hidden, nullptr, nullptr);
}

LstmState transfer(const Parameters& p, const LstmState& encoder) {
  Var c0 = ad::add_row(ad::matmul(encoder.cell, p.cell_w), p.cell_b);
  Var h0 = ad::tanh(ad::add_row(ad::matmul(encoder.hidden, p.hid_w), p.hid_b));
  return {c0, h0};
}

Density decode(const Parameters& p, const LstmState& initial, Var inputs, std::size_t batch,
               std::size_t hidden, bool per_lead_heads) {
  std::vector<Var> hiddens;
  run_lstm(inputs, p.dec_wx, p.dec_wh, p.dec_b, ModelConfig::kHorizon, batch, hidden, &initial, &hiddens);
  std::vector<Var> raw;
  raw.reserve(hiddens.size());
  for (std::size_t lead = 0; lead < hiddens.size(); ++lead) {
    Var w = per_lead_heads ? ad::slice_cols(p.head_w, 3 * lead, 3 * lead + 3) : p.head_w;
    Var b = per_lead_heads ? ad::slice_cols(p.head_b, 3 * lead, 3 * lead + 3) : p.head_b;
    raw.push_back(ad::add_row(ad::matmul(hiddens[lead], w), b));
  }
  Var all = ad::concat_rows(raw);  // [(8*B) x 3]
  Density d;
  d.location = ad::slice_cols(all, 0, 1);
  d.scale = ad::clamp(ad::softplus(ad::slice_cols(all, 1, 2)), kScaleFloor, HUGE_VAL);
  d.asymmetry = ad::clamp(ad::sigmoid(ad::slice_cols(all, 2, 3)), kAsymmetryMin, kAsymmetryMax);
  return d;
}

Density forward(ad::Graph& g, const Parameters& p, const ModelConfig& c, const Batch& batch) {
  const std::size_t b = batch.size;
  Var enc_in = g.constant(Shape{c.hindcast_length * b, c.encoder_inputs()}, batch.hindcast);
  Var dec_in = g.constant(Shape{ModelConfig::kHorizon * b, c.decoder_inputs()}, batch.forecast);
  const LstmState enc = encode(p, enc_in, c.hindcast_length, b, c.hidden_size);
  const LstmState init = transfer(p, enc);
  return decode(p, init, dec_in, b, c.hidden_size, c.per_lead_heads);
}

Var nll(const Density& d, Var targets, Var mask, std::size_t unmasked) {
  if (unmasked == 0) throw DataError("no training signal: every target is masked");
  Var u = ad::div(ad::sub(targets, d.location), d.scale);
  Var tau = d.asymmetry;
  Var log_norm = ad::add(ad::log(tau), ad::log(ad::add_scalar(ad::scale(tau, -1.0), 1.0)));
  Var per = ad::add(ad::sub(ad::log(d.scale), log_norm), ad::pinball(u, tau));
  return ad::scale(ad::sum(ad::mul(per, mask)), 1.0 / static_cast<double>(unmasked));
}

}  // namespace graph

// ---------------------------------------------------------------- value API

namespace {

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + " contains non-finite values");
  }
}

std::vector<double> with_statics(const Matrix& m, std::span<const double> statics) {
  std::vector<double> out;
  out.reserve(m.rows * (m.cols + statics.size()));
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    out.insert(out.end(), row.begin(), row.end());
    out.insert(out.end(), statics.begin(), statics.end());
  }
  return out;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> run_encoder(const ForecastModelState& state,
                                                                const ModelConfig& config,
                                                                const Matrix& hindcast,
                                                                std::span<const double> statics) {
  require_finite(hindcast.data, "encoder inputs");
  require_finite(statics, "static attributes");
  if (hindcast.rows == 0 || hindcast.cols + statics.size() != config.encoder_inputs()) {
    throw ShapeError("run_encoder: expected " + std::to_string(config.encoder_inputs()) +
                     " inputs per step, got " + std::to_string(hindcast.cols + statics.size()));
  }
  ad::Graph g;
  auto& s = const_cast<ForecastModelState&>(state);
  const auto p = graph::bind(g, s, false);
  Var in = g.constant(Shape{hindcast.rows, config.encoder_inputs()}, with_statics(hindcast, statics));
  const auto enc = graph::encode(p, in, hindcast.rows, 1, config.hidden_size);
  return {{enc.cell.value().begin(), enc.cell.value().end()},
          {enc.hidden.value().begin(), enc.hidden.value().end()}};
}

std::pair<std::vector<double>, std::vector<double>> transfer_state(const ForecastModelState& state,
                                                                   std::span<const double> cell,
                                                                   std::span<const double> hidden) {
  ad::Graph g;
  auto& s = const_cast<ForecastModelState&>(state);
  const auto p = graph::bind(g, s, false);
  const std::size_t h = state.cell_transfer_bias.values.size();
  if (cell.size() != h || hidden.size() != h) throw ShapeError("transfer_state: state size mismatch");
  graph::LstmState enc{g.constant(Shape{1, h}, {cell.begin(), cell.end()}),
                       g.constant(Shape{1, h}, {hidden.begin(), hidden.end()})};
  const auto out = graph::transfer(p, enc);
  return {{out.cell.value().begin(), out.cell.value().end()},
          {out.hidden.value().begin(), out.hidden.value().end()}};
}

std::array<DensityParams, ModelConfig::kHorizon> run_decoder(const ForecastModelState& state,
                                                             const ModelConfig& config,
                                                             std::span<const double> cell,
                                                             std::span<const double> hidden,
                                                             const Matrix& forecast,
                                                             std::span<const double> statics) {
  require_finite(forecast.data, "decoder inputs");
  const std::span<const double> dec_statics = config.statics_in_decoder ? statics : std::span<const double>{};
  if (forecast.rows != ModelConfig::kHorizon || forecast.cols + dec_statics.size() != config.decoder_inputs()) {
    throw ShapeError("run_decoder: expected [8 x " + std::to_string(config.decoder_inputs()) + "] inputs");
  }
  ad::Graph g;
  auto& s = const_cast<ForecastModelState&>(state);
  const auto p = graph::bind(g, s, false);
  const std::size_t h = config.hidden_size;
  graph::LstmState init{g.constant(Shape{1, h}, {cell.begin(), cell.end()}),
                        g.constant(Shape{1, h}, {hidden.begin(), hidden.end()})};
  Var in = g.constant(Shape{ModelConfig::kHorizon, config.decoder_inputs()}, with_statics(forecast, dec_statics));
  const auto d = graph::decode(p, init, in, 1, h, config.per_lead_heads);
  std::array<DensityParams, ModelConfig::kHorizon> out;
  for (std::size_t lead = 0; lead < ModelConfig::kHorizon; ++lead) {
    out[lead] = DensityParams{d.location.value()[lead], d.scale.value()[lead], d.asymmetry.value()[lead]};
    if (!std::isfinite(out[lead].location) || !std::isfinite(out[lead].scale) ||
        !std::isfinite(out[lead].asymmetry)) {
      throw NumericError("non-finite density parameter at lead " + std::to_string(lead));
    }
  }
  return out;
}

double nll_loss(std::span<const DensityParams> params, std::span<const double> targets,
                std::span<const bool> mask) {
  return ald_nll(params, targets, mask);
}

}  // namespace hydrocast
