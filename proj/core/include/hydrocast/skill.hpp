#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hydrocast/forest.hpp"
#include "hydrocast/matrix.hpp"

namespace hydrocast {

struct BasinRecord;

struct AttributeTable {
  std::vector<std::string> gauge_ids;
  std::vector<std::string> features;
  Matrix values;  // gauges x features
};

// Missing values are replaced with the column median; an all-missing column
// becomes 0.
AttributeTable attribute_table(std::span<const BasinRecord> records, std::vector<std::string> features = {});
void median_impute(Matrix& x);

// Fold index per row; every class is spread round-robin after a seeded
// shuffle. Throws ValidationError when a class has fewer than k members.
std::vector<std::size_t> stratified_folds(std::span<const double> labels, std::size_t k, std::uint64_t seed);

struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;  // row = true class, column = predicted class

  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * classes + predicted]; }
  std::size_t total() const;
  double accuracy() const;
  double micro_precision() const;
  double micro_recall() const;
};

struct ClassifierEvaluation {
  ConfusionMatrix confusion;
  std::vector<int> out_of_fold;  // predicted class per row
  double micro_precision = 0.0;
  double micro_recall = 0.0;
  double accuracy = 0.0;
};

// Pooled out-of-fold confusion over stratified folds. Micro precision and
// recall are computed separately and checked against accuracy.
ClassifierEvaluation evaluate_classifier(const Matrix& x, std::span<const double> labels,
                                         const std::vector<std::string>& features, std::size_t k,
                                         const ForestConfig& config, std::uint64_t seed);

// 1 when the score is above the mean over all gauges, else 0.
std::vector<double> above_mean_labels(std::span<const double> scores);

inline constexpr double kSimilarityBand = 0.05;
enum class WhichModel { a_better = 0, similar = 1, b_better = 2 };

std::vector<double> which_model_labels(std::span<const double> f1_a, std::span<const double> f1_b,
                                       double band = kSimilarityBand);

ClassifierEvaluation which_model_where(const Matrix& x, const std::vector<std::string>& features,
                                       std::span<const double> f1_a, std::span<const double> f1_b, std::size_t k,
                                       const ForestConfig& config, std::uint64_t seed,
                                       double band = kSimilarityBand);

Forest fit_skill_regressor(const Matrix& x, std::span<const double> f1, std::vector<std::string> features,
                           ForestConfig config, std::uint64_t seed);
std::vector<double> predict_values(const Forest& forest, const Matrix& x);
double r_squared(std::span<const double> predicted, std::span<const double> actual);

// Pearson correlation of each column with y; nullopt for constant columns.
std::vector<std::optional<double>> attribute_correlations(const Matrix& x, std::span<const double> y);

// importances.csv: feature,importance,correlation
std::string importances_csv(const Forest& forest, std::span<const std::optional<double>> correlations);
// confusion.csv: true_class,predicted_class,count
std::string confusion_csv(const ConfusionMatrix& m, std::span<const std::string> class_names);
// predicted_f1.csv: basin_id,predicted
std::string predicted_csv(std::span<const std::string> basin_ids, std::span<const double> values);

}  // namespace hydrocast
