#pragma once

// Shared helpers for the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "hydrocast/model.hpp"

namespace fixtures {

inline hydrocast::ModelConfig tiny_config(std::size_t hidden, std::size_t hindcast, std::size_t fe, std::size_t fd,
                                          std::size_t statics) {
  hydrocast::ModelConfig c = hydrocast::ModelConfig::desk_scale();
  c.hidden_size = hidden;
  c.hindcast_length = hindcast;
  c.hindcast_dynamic = fe;
  c.forecast_dynamic = fd;
  c.static_inputs = statics;
  return c;
}

// Random inputs with statics copied into every row, as assemble_batch does.
inline hydrocast::Batch random_batch(const hydrocast::ModelConfig& c, std::size_t size, std::mt19937_64& rng,
                                     double mask_fraction = 0.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  hydrocast::Batch b;
  b.size = size;
  std::vector<std::vector<double>> statics(size, std::vector<double>(c.static_inputs));
  for (auto& s : statics) {
    for (auto& v : s) v = n(rng);
  }
  for (std::size_t t = 0; t < c.hindcast_length; ++t) {
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t f = 0; f < c.hindcast_dynamic; ++f) b.hindcast.push_back(n(rng));
      b.hindcast.insert(b.hindcast.end(), statics[i].begin(), statics[i].end());
    }
  }
  for (std::size_t t = 0; t < hydrocast::ModelConfig::kHorizon; ++t) {
    for (std::size_t i = 0; i < size; ++i) {
      for (std::size_t f = 0; f < c.forecast_dynamic; ++f) b.forecast.push_back(n(rng));
      if (c.statics_in_decoder) b.forecast.insert(b.forecast.end(), statics[i].begin(), statics[i].end());
      b.targets.push_back(n(rng));
      b.mask.push_back(u(rng) < mask_fraction ? 0.0 : 1.0);
    }
  }
  b.mask[0] = 1.0;
  return b;
}

inline double batch_loss(hydrocast::ForecastModelState& state, const hydrocast::ModelConfig& c,
                         const hydrocast::Batch& b, bool backward = false) {
  namespace ad = hydrocast::ad;
  ad::Graph g;
  const auto p = hydrocast::graph::bind(g, state, backward);
  const auto d = hydrocast::graph::forward(g, p, c, b);
  std::size_t unmasked = 0;
  for (double m : b.mask) unmasked += m > 0.0;
  const std::size_t n = b.targets.size();
  auto loss = hydrocast::graph::nll(d, g.constant(ad::Shape{n, 1}, b.targets), g.constant(ad::Shape{n, 1}, b.mask),
                                    unmasked);
  if (backward) g.backward(loss);
  return loss.scalar();
}

// Temporary directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("hydrocast_" + tag + "_" + std::to_string(rng() % 1000000007));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
