#include "hydrocast/skill.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "hydrocast/basin.hpp"
#include "hydrocast/csv.hpp"
#include "hydrocast/error.hpp"

namespace hydrocast {

void median_impute(Matrix& x) {
  for (std::size_t c = 0; c < x.cols; ++c) {
    std::vector<double> present;
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (!std::isnan(x(r, c))) present.push_back(x(r, c));
    }
    double fill = 0.0;
    if (!present.empty()) {
      std::sort(present.begin(), present.end());
      const std::size_t m = present.size() / 2;
      fill = present.size() % 2 ? present[m] : 0.5 * (present[m - 1] + present[m]);
    }
    for (std::size_t r = 0; r < x.rows; ++r) {
      if (std::isnan(x(r, c))) x(r, c) = fill;
    }
  }
}

AttributeTable attribute_table(std::span<const BasinRecord> records, std::vector<std::string> features) {
  if (features.empty()) {
    for (const auto& r : records) features.insert(features.end(), r.attributes.names.begin(), r.attributes.names.end());
    std::sort(features.begin(), features.end());
    features.erase(std::unique(features.begin(), features.end()), features.end());
  }
  AttributeTable t;
  t.features = std::move(features);
  t.values = Matrix(records.size(), t.features.size(), std::nan(""));
  for (std::size_t r = 0; r < records.size(); ++r) {
    t.gauge_ids.push_back(records[r].gauge_id);
    for (std::size_t c = 0; c < t.features.size(); ++c) {
      if (const auto v = records[r].attributes.get(t.features[c])) t.values(r, c) = *v;
    }
  }
  median_impute(t.values);
  return t;
}

std::vector<std::size_t> stratified_folds(std::span<const double> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("stratified folds need k >= 2");
  std::map<double, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<std::size_t> fold(labels.size(), 0);
  std::mt19937_64 rng(seed);
  std::size_t offset = 0;
  for (auto& [label, rows] : by_class) {
    if (rows.size() < k) {
      throw ValidationError("stratification: class " + csv::format_number(label) + " has " +
                            std::to_string(rows.size()) + " members, fewer than k = " + std::to_string(k));
    }
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[rng() % i]);
    // Continue the round-robin where the previous class stopped so fold sizes stay balanced.
    for (std::size_t i = 0; i < rows.size(); ++i) fold[rows[i]] = (offset + i) % k;
    offset = (offset + rows.size()) % k;
  }
  return fold;
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

double ConfusionMatrix::accuracy() const {
  std::size_t diag = 0;
  for (std::size_t c = 0; c < classes; ++c) diag += at(c, c);
  return total() ? static_cast<double>(diag) / static_cast<double>(total()) : 0.0;
}

double ConfusionMatrix::micro_precision() const {
  // Pooled TP / (TP + FP) over classes, each column being that class's predictions.
  double tp = 0, fp = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    tp += static_cast<double>(at(c, c));
    for (std::size_t t = 0; t < classes; ++t) {
      if (t != c) fp += static_cast<double>(at(t, c));
    }
  }
  return tp + fp > 0 ? tp / (tp + fp) : 0.0;
}

double ConfusionMatrix::micro_recall() const {
  double tp = 0, fn = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    tp += static_cast<double>(at(c, c));
    for (std::size_t p = 0; p < classes; ++p) {
      if (p != c) fn += static_cast<double>(at(c, p));
    }
  }
  return tp + fn > 0 ? tp / (tp + fn) : 0.0;
}

ClassifierEvaluation evaluate_classifier(const Matrix& x, std::span<const double> labels,
                                         const std::vector<std::string>& features, std::size_t k,
                                         const ForestConfig& config, std::uint64_t seed) {
  if (labels.size() != x.rows) throw ShapeError("evaluate_classifier: label count differs from row count");
  const auto folds = stratified_folds(labels, k, seed);
  std::size_t classes = 0;
  for (double v : labels) classes = std::max(classes, static_cast<std::size_t>(v) + 1);

  ClassifierEvaluation ev;
  ev.out_of_fold.assign(x.rows, -1);
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < x.rows; ++i) (folds[i] == f ? test : train).push_back(i);
    Matrix xt(train.size(), x.cols);
    std::vector<double> yt(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      std::copy_n(x.row(train[i]).begin(), x.cols, xt.row(i).begin());
      yt[i] = labels[train[i]];
    }
    const Forest forest = fit_forest(xt, yt, features, config, seed + f + 1);
    for (std::size_t i : test) ev.out_of_fold[i] = forest.predict_class(x.row(i));
  }
  ev.confusion.classes = classes;
  ev.confusion.counts.assign(classes * classes, 0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const auto p = static_cast<std::size_t>(ev.out_of_fold[i]);
    const auto t = static_cast<std::size_t>(labels[i]);
    if (p >= classes) throw NumericError("classifier predicted an unknown class");
    ++ev.confusion.counts[t * classes + p];
  }
  ev.micro_precision = ev.confusion.micro_precision();
  ev.micro_recall = ev.confusion.micro_recall();
  ev.accuracy = ev.confusion.accuracy();
  if (std::abs(ev.micro_precision - ev.accuracy) > 1e-12 || std::abs(ev.micro_recall - ev.accuracy) > 1e-12) {
    throw NumericError("micro precision/recall disagree with accuracy for single-label data");
  }
  return ev;
}

std::vector<double> above_mean_labels(std::span<const double> scores) {
  if (scores.empty()) throw ValidationError("above_mean_labels: no scores");
  const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  std::vector<double> out;
  for (double s : scores) out.push_back(s > mean ? 1.0 : 0.0);
  return out;
}

std::vector<double> which_model_labels(std::span<const double> f1_a, std::span<const double> f1_b, double band) {
  if (f1_a.size() != f1_b.size()) throw ShapeError("which_model_labels: score lists differ in length");
  if (!(band >= 0.0)) throw ValidationError("similarity band must be non-negative");
  std::vector<double> out;
  for (std::size_t i = 0; i < f1_a.size(); ++i) {
    const double d = f1_a[i] - f1_b[i];
    const auto c = std::abs(d) <= band ? WhichModel::similar : d > 0 ? WhichModel::a_better : WhichModel::b_better;
    out.push_back(static_cast<double>(c));
  }
  return out;
}

ClassifierEvaluation which_model_where(const Matrix& x, const std::vector<std::string>& features,
                                       std::span<const double> f1_a, std::span<const double> f1_b, std::size_t k,
                                       const ForestConfig& config, std::uint64_t seed, double band) {
  const auto labels = which_model_labels(f1_a, f1_b, band);
  return evaluate_classifier(x, labels, features, k, config, seed);
}

Forest fit_skill_regressor(const Matrix& x, std::span<const double> f1, std::vector<std::string> features,
                           ForestConfig config, std::uint64_t seed) {
  config.task = ForestTask::regression;
  return fit_forest(x, f1, std::move(features), config, seed);
}

std::vector<double> predict_values(const Forest& forest, const Matrix& x) {
  std::vector<double> out;
  for (std::size_t r = 0; r < x.rows; ++r) out.push_back(forest.predict_value(x.row(r)));
  return out;
}

double r_squared(std::span<const double> predicted, std::span<const double> actual) {
  if (predicted.size() != actual.size() || actual.empty()) throw ShapeError("r_squared: length mismatch");
  const double mean = std::accumulate(actual.begin(), actual.end(), 0.0) / static_cast<double>(actual.size());
  double ss_res = 0, ss_tot = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ss_res += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
    ss_tot += (actual[i] - mean) * (actual[i] - mean);
  }
  return ss_tot > 0 ? 1.0 - ss_res / ss_tot : std::nan("");
}

std::vector<std::optional<double>> attribute_correlations(const Matrix& x, std::span<const double> y) {
  if (y.size() != x.rows) throw ShapeError("attribute_correlations: length mismatch");
  const double n = static_cast<double>(x.rows);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  std::vector<std::optional<double>> out;
  for (std::size_t c = 0; c < x.cols; ++c) {
    double mx = 0;
    for (std::size_t r = 0; r < x.rows; ++r) mx += x(r, c);
    mx /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t r = 0; r < x.rows; ++r) {
      sxy += (x(r, c) - mx) * (y[r] - my);
      sxx += (x(r, c) - mx) * (x(r, c) - mx);
      syy += (y[r] - my) * (y[r] - my);
    }
    if (sxx > 0 && syy > 0) {
      out.emplace_back(sxy / std::sqrt(sxx * syy));
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

std::string importances_csv(const Forest& forest, std::span<const std::optional<double>> correlations) {
  std::ostringstream out;
  out << "feature,importance,correlation\n";
  for (std::size_t f = 0; f < forest.features.size(); ++f) {
    out << forest.features[f] << ',' << csv::format_number(forest.importances[f]) << ','
        << (f < correlations.size() && correlations[f] ? csv::format_number(*correlations[f]) : std::string())
        << '\n';
  }
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& m, std::span<const std::string> class_names) {
  const auto name = [&](std::size_t c) { return c < class_names.size() ? class_names[c] : std::to_string(c); };
  std::ostringstream out;
  out << "true_class,predicted_class,count\n";
  for (std::size_t t = 0; t < m.classes; ++t) {
    for (std::size_t p = 0; p < m.classes; ++p) out << name(t) << ',' << name(p) << ',' << m.at(t, p) << '\n';
  }
  return out.str();
}

std::string predicted_csv(std::span<const std::string> basin_ids, std::span<const double> values) {
  if (basin_ids.size() != values.size()) throw ShapeError("predicted_csv: length mismatch");
  std::ostringstream out;
  out << "basin_id,predicted\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << basin_ids[i] << ',' << csv::format_number(values[i]) << '\n';
  return out.str();
}

}  // namespace hydrocast
