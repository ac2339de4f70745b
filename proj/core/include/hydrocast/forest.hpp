#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hydrocast/matrix.hpp"

namespace hydrocast {

enum class ForestTask { classification, regression };

struct ForestConfig {
  ForestTask task = ForestTask::classification;
  std::size_t n_trees = 500;
  std::size_t max_depth = 0;         // 0 = unlimited
  std::size_t min_samples_leaf = 1;
  std::size_t max_features = 0;      // 0 = sqrt(p) for classification, p/3 for regression
  bool balanced_bootstrap = true;    // classification only
  unsigned jobs = 1;

  std::size_t features_per_split(std::size_t p) const;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;  // class distribution (sums to 1) or {mean}
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf(std::span<const double> x) const;
  std::size_t depth() const;
};

struct Forest {
  ForestConfig config;
  std::vector<std::string> features;
  std::size_t n_classes = 0;  // 0 for regression
  std::uint64_t seed = 0;
  std::vector<DecisionTree> trees;
  std::vector<double> importances;  // mean decrease in impurity, sums to 1 (or all zero)

  std::string schema_hash() const;
  // Vote fraction per class; each tree votes for the argmax of its leaf.
  std::vector<double> class_votes(std::span<const double> x) const;
  int predict_class(std::span<const double> x) const;
  double predict_value(std::span<const double> x) const;
};

std::string schema_hash(std::span<const std::string> features);

// Classification labels are integers 0..C-1 stored as doubles; at least two
// classes must be present. Rows with NaN are rejected (impute upstream).
Forest fit_forest(const Matrix& x, std::span<const double> y, std::vector<std::string> features,
                  const ForestConfig& config, std::uint64_t seed);

// Reorders the columns of `x` (named by `features`) into the forest's schema.
// Throws ValidationError when a forest feature is missing.
Matrix align_to_schema(const Forest& forest, const Matrix& x, std::span<const std::string> features);

std::string forest_json(const Forest& forest);
Forest parse_forest(const std::string& text);

}  // namespace hydrocast
