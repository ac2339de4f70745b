#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hydrocast/features.hpp"
#include "hydrocast/model.hpp"

namespace hydrocast {

// Everything needed to reproduce one trained ensemble member.
struct TrainedModel {
  ModelConfig config;
  FeatureTransform transform;
  ForecastModelState state;
  std::uint64_t seed = 0;
};

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_json(const TrainedModel& model);
TrainedModel parse_checkpoint(const std::string& text, const std::string& source = "<memory>");
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace hydrocast
