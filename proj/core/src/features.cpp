#include "hydrocast/features.hpp"

#include <algorithm>
#include <cmath>

#include "hydrocast/error.hpp"

namespace hydrocast {

namespace {

bool in_periods(Date d, std::span<const DateRange> periods) {
  if (periods.empty()) return true;
  return std::any_of(periods.begin(), periods.end(), [d](const DateRange& r) { return r.contains(d); });
}

struct Accumulator {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double delta = x - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (x - mean);
  }
  double sample_std() const { return n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0; }
};

Accumulator accumulate_series(std::span<const BasinRecord> records, const std::string& feature,
                              std::span<const DateRange> periods) {
  Accumulator acc;
  for (const auto& r : records) {
    const std::vector<double>* col =
        feature == kTargetFeature ? &r.discharge : r.forcing(feature);
    if (col == nullptr) continue;
    for (std::size_t i = 0; i < r.num_days; ++i) {
      const double v = (*col)[i];
      if (!is_missing(v) && in_periods(r.date_at(i), periods)) acc.add(v);
    }
  }
  return acc;
}

}  // namespace

InputSchema InputSchema::from_sources(const DatasetSchema& dataset,
                                      const std::vector<std::string>& hindcast_sources,
                                      const std::vector<std::string>& forecast_sources,
                                      std::map<std::string, std::vector<std::string>> substitutions,
                                      std::vector<std::string> statics) {
  InputSchema s;
  for (const auto& src : hindcast_sources) {
    if (!dataset.sources.count(src)) throw ValidationError("unknown hindcast source '" + src + "'");
    auto v = dataset.qualified_variables(src);
    s.hindcast_features.insert(s.hindcast_features.end(), v.begin(), v.end());
  }
  for (const auto& src : forecast_sources) {
    if (!dataset.sources.count(src)) throw ValidationError("unknown forecast source '" + src + "'");
    auto v = dataset.qualified_variables(src);
    s.forecast_features.insert(s.forecast_features.end(), v.begin(), v.end());
  }
  s.static_features = statics.empty() ? dataset.attributes : std::move(statics);
  s.substitutions = std::move(substitutions);
  return s;
}

const FeatureStats& FeatureTransform::at(const std::string& feature) const {
  auto it = stats.find(feature);
  if (it == stats.end()) throw ValidationError("feature '" + feature + "' is not part of the transform");
  return it->second;
}

double FeatureTransform::apply(const std::string& feature, double raw) const {
  const auto& s = at(feature);
  return (raw - s.mean) / s.std;
}

double FeatureTransform::invert(const std::string& feature, double standardized) const {
  const auto& s = at(feature);
  return standardized * s.std + s.mean;
}

FeatureTransform fit_transform(std::span<const BasinRecord> records, const InputSchema& schema,
                               std::span<const DateRange> train_periods) {
  if (records.empty()) throw DataError("fit_transform: no training records");
  FeatureTransform t;
  t.schema.substitutions = schema.substitutions;

  auto fit_dynamic = [&](const std::vector<std::string>& features, std::vector<std::string>& kept) {
    for (const auto& f : features) {
      Accumulator acc = accumulate_series(records, f, train_periods);
      if (acc.n == 0) {
        // Values will come from substitutes; standardize on their scale.
        auto sub = schema.substitutions.find(f);
        if (sub != schema.substitutions.end()) {
          for (const auto& s : sub->second) {
            acc = accumulate_series(records, s, train_periods);
            if (acc.n > 0) break;
          }
        }
      }
      if (acc.n == 0) {
        t.dropped.push_back(f);
        t.warnings.push_back("feature '" + f + "' has no training data; dropped");
        continue;
      }
      const double sd = acc.sample_std();
      if (!(sd > 0.0)) {
        t.dropped.push_back(f);
        t.warnings.push_back("feature '" + f + "' has zero variance; dropped");
        continue;
      }
      t.stats[f] = FeatureStats{acc.mean, sd};
      kept.push_back(f);
    }
  };
  fit_dynamic(schema.hindcast_features, t.schema.hindcast_features);
  fit_dynamic(schema.forecast_features, t.schema.forecast_features);

  for (const auto& name : schema.static_features) {
    Accumulator acc;
    for (const auto& r : records) {
      const auto v = r.attributes.get(name);
      if (v && !is_missing(*v)) acc.add(*v);
    }
    const double sd = acc.sample_std();
    if (!(sd > 0.0)) {
      t.dropped.push_back(name);
      t.warnings.push_back("attribute '" + name + "' has zero variance or too few values; dropped");
      continue;
    }
    t.stats[name] = FeatureStats{acc.mean, sd};
    t.schema.static_features.push_back(name);
  }

  const Accumulator q = accumulate_series(records, kTargetFeature, train_periods);
  if (!(q.sample_std() > 0.0)) throw DataError("fit_transform: training discharge has no variance");
  t.stats[kTargetFeature] = FeatureStats{q.mean, q.sample_std()};
  return t;
}

std::size_t ImputationRecord::count(ImputeTag tag) const {
  std::size_t n = 0;
  for (const auto& col : tags) n += static_cast<std::size_t>(std::count(col.begin(), col.end(), tag));
  return n;
}

std::optional<std::size_t> PreparedBasin::index_of(Date d) const {
  if (num_days == 0 || d < start || d >= start + static_cast<std::int32_t>(num_days)) return std::nullopt;
  return static_cast<std::size_t>(d - start);
}

PreparedBasin impute(const BasinRecord& record, const FeatureTransform& transform) {
  PreparedBasin out;
  out.gauge_id = record.gauge_id;
  out.start = record.start;
  out.num_days = record.num_days;
  const std::size_t n = record.num_days;

  auto fill_block = [&](const std::vector<std::string>& features, Matrix& block) {
    const std::size_t nf = features.size();
    block = Matrix(n, 2 * nf);
    for (std::size_t f = 0; f < nf; ++f) {
      const std::string& name = features[f];
      const std::vector<double>* own = record.forcing(name);
      std::vector<const std::vector<double>*> subs;
      if (auto it = transform.schema.substitutions.find(name); it != transform.schema.substitutions.end()) {
        for (const auto& s : it->second) {
          if (const auto* col = record.forcing(s)) subs.push_back(col);
        }
      }
      std::vector<ImputeTag> tags(n, ImputeTag::observed);
      bool any_value = false;
      for (std::size_t i = 0; i < n; ++i) {
        double raw = own != nullptr ? (*own)[i] : std::nan("");
        if (is_missing(raw)) {
          for (const auto* col : subs) {
            if (!is_missing((*col)[i])) {
              raw = (*col)[i];
              tags[i] = ImputeTag::substitute;
              break;
            }
          }
        }
        if (is_missing(raw)) {
          tags[i] = ImputeTag::mean_fill;
          block(i, f) = 0.0;  // the training mean in standardized units
        } else {
          any_value = true;
          block(i, f) = transform.apply(name, raw);
        }
        block(i, nf + f) = tags[i] == ImputeTag::observed ? 0.0 : 1.0;
      }
      if (!any_value) {
        throw DataError("basin " + record.gauge_id + ": feature '" + name +
                        "' is missing in every source for the whole record");
      }
      out.imputation.features.push_back(name);
      out.imputation.tags.push_back(std::move(tags));
    }
  };
  fill_block(transform.schema.hindcast_features, out.hindcast);
  fill_block(transform.schema.forecast_features, out.forecast);

  for (const auto& name : transform.schema.static_features) {
    const auto v = record.attributes.get(name);
    out.statics.push_back(v && !is_missing(*v) ? transform.apply(name, *v) : 0.0);
  }

  out.target.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double q = record.discharge[i];
    out.target[i] = is_missing(q) ? q : transform.apply(kTargetFeature, q);
  }
  return out;
}

}  // namespace hydrocast
