#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hydrocast/basin.hpp"
#include "hydrocast/matrix.hpp"

namespace hydrocast {

// Which columns feed the model. Dynamic features are qualified
// "source.variable" names.
struct InputSchema {
  std::vector<std::string> hindcast_features;
  std::vector<std::string> forecast_features;
  std::vector<std::string> static_features;
  // Ordered cross-source substitutes tried before mean fill, e.g.
  // "hres.precip" -> {"era5l.precip"}.
  std::map<std::string, std::vector<std::string>> substitutions;

  // Expands source names into their variables. Empty `statics` selects
  // every dataset attribute.
  static InputSchema from_sources(const DatasetSchema& dataset,
                                  const std::vector<std::string>& hindcast_sources,
                                  const std::vector<std::string>& forecast_sources,
                                  std::map<std::string, std::vector<std::string>> substitutions,
                                  std::vector<std::string> statics = {});
};

struct FeatureStats {
  double mean = 0.0;
  double std = 1.0;
};

inline constexpr const char* kTargetFeature = "discharge.q_mmday";

// Training-period standardization. `schema` holds only retained features.
struct FeatureTransform {
  InputSchema schema;
  std::map<std::string, FeatureStats> stats;  // every retained feature plus the target
  std::vector<std::string> dropped;
  std::vector<std::string> warnings;

  const FeatureStats& at(const std::string& feature) const;
  double apply(const std::string& feature, double raw) const;
  double invert(const std::string& feature, double standardized) const;
};

// Statistics over records restricted to days inside `train_periods`
// (all days when empty). Features without variance or training data are
// dropped and reported.
FeatureTransform fit_transform(std::span<const BasinRecord> records, const InputSchema& schema,
                               std::span<const DateRange> train_periods = {});

enum class ImputeTag : std::uint8_t { observed = 0, substitute = 1, mean_fill = 2 };

struct ImputationRecord {
  std::vector<std::string> features;          // hindcast then forecast features
  std::vector<std::vector<ImputeTag>> tags;    // tags[feature][day]

  bool flag(std::size_t feature, std::size_t day) const { return tags[feature][day] != ImputeTag::observed; }
  std::size_t count(ImputeTag tag) const;
};

// Dense standardized model inputs for one basin. Each dynamic block holds
// the feature columns followed by one 0/1 imputation flag per feature.
struct PreparedBasin {
  std::string gauge_id;
  Date start;
  std::size_t num_days = 0;
  Matrix hindcast;
  Matrix forecast;
  std::vector<double> statics;
  std::vector<double> target;  // standardized discharge, NaN where missing
  ImputationRecord imputation;

  std::optional<std::size_t> index_of(Date d) const;
};

// Fills every gap: substitutes first (in declared order), then the training
// mean. Throws DataError when a feature and all its substitutes are missing
// for the whole record.
PreparedBasin impute(const BasinRecord& record, const FeatureTransform& transform);

}  // namespace hydrocast
