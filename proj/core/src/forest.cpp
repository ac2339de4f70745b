#include "hydrocast/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "hydrocast/error.hpp"
#include "hydrocast/hash.hpp"
#include "json.hpp"

namespace hydrocast {

std::size_t ForestConfig::features_per_split(std::size_t p) const {
  if (max_features > 0) return std::min(max_features, p);
  const double m = task == ForestTask::classification ? std::sqrt(static_cast<double>(p))
                                                      : static_cast<double>(p) / 3.0;
  return std::clamp<std::size_t>(static_cast<std::size_t>(m), 1, p);
}

const TreeNode& DecisionTree::leaf(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i];
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::string schema_hash(std::span<const std::string> features) {
  std::string joined;
  for (const auto& f : features) joined += f + '\n';
  return hex_digest(fnv1a64(joined));
}

std::string Forest::schema_hash() const { return hydrocast::schema_hash(features); }

std::vector<double> Forest::class_votes(std::span<const double> x) const {
  if (n_classes == 0) throw ValidationError("class_votes on a regression forest");
  if (x.size() != features.size()) throw ValidationError("attribute vector does not match the forest schema");
  std::vector<double> votes(n_classes, 0.0);
  for (const auto& t : trees) {
    const auto& v = t.leaf(x).value;
    votes[static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin())] += 1.0;
  }
  for (double& v : votes) v /= static_cast<double>(trees.size());
  return votes;
}

int Forest::predict_class(std::span<const double> x) const {
  const auto v = class_votes(x);
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

double Forest::predict_value(std::span<const double> x) const {
  if (n_classes != 0) throw ValidationError("predict_value on a classification forest");
  if (x.size() != features.size()) throw ValidationError("attribute vector does not match the forest schema");
  double s = 0.0;
  for (const auto& t : trees) s += t.leaf(x).value[0];
  return s / static_cast<double>(trees.size());
}

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t d;
  do d = rng();
  while (d >= limit);
  return d % bound;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> y, const ForestConfig& cfg, std::size_t n_classes,
              std::uint64_t seed)
      : x_(x), y_(y), cfg_(cfg), classes_(n_classes), rng_(seed), importance_(x.cols, 0.0) {}

  DecisionTree build(std::vector<std::size_t> samples) {
    tree_.nodes.clear();
    grow(samples, 0);
    return std::move(tree_);
  }
  const std::vector<double>& importance() const { return importance_; }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  double impurity(std::span<const std::size_t> s) const {
    const double n = static_cast<double>(s.size());
    if (classes_ > 0) {
      std::vector<double> c(classes_, 0.0);
      for (std::size_t i : s) c[static_cast<std::size_t>(y_[i])] += 1.0;
      double g = 1.0;
      for (double v : c) g -= (v / n) * (v / n);
      return g;
    }
    double m = 0.0;
    for (std::size_t i : s) m += y_[i];
    m /= n;
    double v = 0.0;
    for (std::size_t i : s) v += (y_[i] - m) * (y_[i] - m);
    return v / n;
  }

  std::vector<double> leaf_value(std::span<const std::size_t> s) const {
    if (classes_ > 0) {
      std::vector<double> c(classes_, 0.0);
      for (std::size_t i : s) c[static_cast<std::size_t>(y_[i])] += 1.0;
      for (double& v : c) v /= static_cast<double>(s.size());
      return c;
    }
    double m = 0.0;
    for (std::size_t i : s) m += y_[i];
    return {m / static_cast<double>(s.size())};
  }

  // Best threshold on one feature by a sorted sweep; gain is the weighted
  // impurity decrease n*I - nL*IL - nR*IR.
  Split best_on(std::vector<std::size_t>& s, std::size_t f, double parent) {
    std::sort(s.begin(), s.end(), [&](std::size_t a, std::size_t b) { return x_(a, f) < x_(b, f); });
    Split best;
    const std::size_t n = s.size(), leaf = cfg_.min_samples_leaf;
    const double dn = static_cast<double>(n);
    std::vector<double> lc(classes_, 0.0), rc(classes_, 0.0);
    double ls = 0, lss = 0, rs = 0, rss = 0;
    for (std::size_t i : s) {
      if (classes_ > 0) {
        rc[static_cast<std::size_t>(y_[i])] += 1.0;
      } else {
        rs += y_[i];
        rss += y_[i] * y_[i];
      }
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const std::size_t i = s[k];
      if (classes_ > 0) {
        lc[static_cast<std::size_t>(y_[i])] += 1.0;
        rc[static_cast<std::size_t>(y_[i])] -= 1.0;
      } else {
        ls += y_[i];
        lss += y_[i] * y_[i];
        rs -= y_[i];
        rss -= y_[i] * y_[i];
      }
      const double lo = x_(i, f), hi = x_(s[k + 1], f);
      if (!(lo < hi) || k + 1 < leaf || n - k - 1 < leaf) continue;
      const double nl = static_cast<double>(k + 1), nr = dn - nl;
      double il, ir;
      if (classes_ > 0) {
        il = 1.0;
        ir = 1.0;
        for (std::size_t c = 0; c < classes_; ++c) {
          il -= (lc[c] / nl) * (lc[c] / nl);
          ir -= (rc[c] / nr) * (rc[c] / nr);
        }
      } else {
        il = std::max(0.0, lss / nl - (ls / nl) * (ls / nl));
        ir = std::max(0.0, rss / nr - (rs / nr) * (rs / nr));
      }
      const double gain = dn * parent - nl * il - nr * ir;
      if (gain > best.gain + 1e-12 * dn) {
        double t = 0.5 * (lo + hi);
        if (!(t < hi)) t = lo;
        best = Split{static_cast<int>(f), t, gain};
      }
    }
    return best;
  }

  int grow(std::vector<std::size_t>& s, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.push_back(TreeNode{});
    const double parent = impurity(s);
    const bool stop = parent <= 0.0 || s.size() < 2 * cfg_.min_samples_leaf ||
                      (cfg_.max_depth > 0 && depth >= cfg_.max_depth);
    Split best;
    if (!stop) {
      std::vector<std::size_t> feats(x_.cols);
      std::iota(feats.begin(), feats.end(), 0);
      const std::size_t mtry = cfg_.features_per_split(x_.cols);
      std::size_t tried = 0;
      // Draw features in random order until `mtry` non-constant ones were tried.
      for (std::size_t k = 0; k < feats.size() && tried < mtry; ++k) {
        std::swap(feats[k], feats[k + uniform_below(rng_, feats.size() - k)]);
        const std::size_t f = feats[k];
        const auto [mn, mx] = std::minmax_element(s.begin(), s.end(), [&](std::size_t a, std::size_t b) {
          return x_(a, f) < x_(b, f);
        });
        if (!(x_(*mn, f) < x_(*mx, f))) continue;
        ++tried;
        const Split cand = best_on(s, f, parent);
        if (cand.gain > best.gain) best = cand;
      }
    }
    if (best.feature < 0) {
      tree_.nodes[static_cast<std::size_t>(id)].value = leaf_value(s);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t i : s) {
      (x_(i, static_cast<std::size_t>(best.feature)) <= best.threshold ? left : right).push_back(i);
    }
    importance_[static_cast<std::size_t>(best.feature)] += best.gain;
    std::vector<std::size_t>().swap(s);
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const Matrix& x_;
  std::span<const double> y_;
  const ForestConfig& cfg_;
  std::size_t classes_;
  std::mt19937_64 rng_;
  std::vector<double> importance_;
  DecisionTree tree_;
};

}  // namespace

Forest fit_forest(const Matrix& x, std::span<const double> y, std::vector<std::string> features,
                  const ForestConfig& config, std::uint64_t seed) {
  if (x.rows == 0 || x.cols == 0) throw ValidationError("fit_forest: empty attribute matrix");
  if (y.size() != x.rows) throw ShapeError("fit_forest: label count differs from row count");
  if (features.size() != x.cols) throw ShapeError("fit_forest: feature names differ from column count");
  if (config.n_trees == 0) throw ValidationError("fit_forest: need at least one tree");
  if (config.min_samples_leaf == 0) throw ValidationError("fit_forest: min_samples_leaf must be >= 1");
  for (double v : x.data) {
    if (!std::isfinite(v)) throw ValidationError("fit_forest: missing or non-finite attribute value");
  }
  Forest forest;
  forest.config = config;
  forest.features = std::move(features);
  forest.seed = seed;

  std::vector<std::vector<std::size_t>> by_class;
  if (config.task == ForestTask::classification) {
    double top = 0.0;
    for (double v : y) {
      if (!(v >= 0.0) || v != std::floor(v)) throw ValidationError("fit_forest: class labels must be 0..C-1");
      top = std::max(top, v);
    }
    forest.n_classes = static_cast<std::size_t>(top) + 1;
    by_class.resize(forest.n_classes);
    for (std::size_t i = 0; i < y.size(); ++i) by_class[static_cast<std::size_t>(y[i])].push_back(i);
    const auto present = std::count_if(by_class.begin(), by_class.end(), [](const auto& c) { return !c.empty(); });
    if (present < 2) throw ValidationError("fit_forest: labels contain a single class");
  } else {
    for (double v : y) {
      if (!std::isfinite(v)) throw ValidationError("fit_forest: non-finite regression target");
    }
  }
  std::vector<std::size_t> nonempty;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (!by_class[c].empty()) nonempty.push_back(c);
  }

  forest.trees.resize(config.n_trees);
  std::vector<std::vector<double>> tree_importance(config.n_trees);
  const auto fit_one = [&](std::size_t t) {
    const std::uint64_t tree_seed = splitmix(seed ^ splitmix(t + 1));
    std::mt19937_64 rng(tree_seed);
    std::vector<std::size_t> sample(x.rows);
    for (auto& s : sample) {
      if (config.task == ForestTask::classification && config.balanced_bootstrap) {
        const auto& members = by_class[nonempty[uniform_below(rng, nonempty.size())]];
        s = members[uniform_below(rng, members.size())];
      } else {
        s = uniform_below(rng, x.rows);
      }
    }
    TreeBuilder builder(x, y, config, forest.n_classes, rng());
    forest.trees[t] = builder.build(std::move(sample));
    auto imp = builder.importance();
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0.0) {
      for (double& v : imp) v /= total;
    }
    tree_importance[t] = std::move(imp);
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(config.n_trees)));
  if (jobs == 1) {
    for (std::size_t t = 0; t < config.n_trees; ++t) fit_one(t);
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) {
      pool.emplace_back([&, j] {
        for (std::size_t t = j; t < config.n_trees; t += jobs) fit_one(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  forest.importances.assign(x.cols, 0.0);
  for (const auto& imp : tree_importance) {
    for (std::size_t f = 0; f < x.cols; ++f) forest.importances[f] += imp[f];
  }
  const double total = std::accumulate(forest.importances.begin(), forest.importances.end(), 0.0);
  if (total > 0.0) {
    for (double& v : forest.importances) v /= total;
  }
  return forest;
}

Matrix align_to_schema(const Forest& forest, const Matrix& x, std::span<const std::string> features) {
  if (features.size() != x.cols) throw ShapeError("align_to_schema: feature names differ from column count");
  std::vector<std::size_t> src;
  for (const auto& f : forest.features) {
    const auto it = std::find(features.begin(), features.end(), f);
    if (it == features.end()) throw ValidationError("schema mismatch: attribute '" + f + "' is missing");
    src.push_back(static_cast<std::size_t>(it - features.begin()));
  }
  Matrix out(x.rows, forest.features.size());
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < src.size(); ++c) out(r, c) = x(r, src[c]);
  }
  return out;
}

std::string forest_json(const Forest& forest) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& t : forest.trees) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      threshold.push_back(n.threshold);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
    }
    trees.push_back({{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}});
  }
  const auto& c = forest.config;
  json j{{"format", "hydrocast.forest"},
         {"task", c.task == ForestTask::classification ? "classification" : "regression"},
         {"config",
          {{"n_trees", c.n_trees},
           {"max_depth", c.max_depth},
           {"min_samples_leaf", c.min_samples_leaf},
           {"max_features", c.max_features},
           {"balanced_bootstrap", c.balanced_bootstrap}}},
         {"seed", forest.seed},
         {"features", forest.features},
         {"schema_hash", forest.schema_hash()},
         {"n_classes", forest.n_classes},
         {"importances", forest.importances},
         {"trees", trees}};
  return j.dump() + "\n";
}

Forest parse_forest(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format") != "hydrocast.forest") throw ValidationError("not a forest file");
    Forest f;
    const auto task = j.at("task").get<std::string>();
    if (task != "classification" && task != "regression") throw ValidationError("unknown forest task " + task);
    f.config.task = task == "classification" ? ForestTask::classification : ForestTask::regression;
    const auto& c = j.at("config");
    f.config.n_trees = c.at("n_trees").get<std::size_t>();
    f.config.max_depth = c.at("max_depth").get<std::size_t>();
    f.config.min_samples_leaf = c.at("min_samples_leaf").get<std::size_t>();
    f.config.max_features = c.at("max_features").get<std::size_t>();
    f.config.balanced_bootstrap = c.at("balanced_bootstrap").get<bool>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.features = j.at("features").get<std::vector<std::string>>();
    f.n_classes = j.at("n_classes").get<std::size_t>();
    f.importances = j.at("importances").get<std::vector<double>>();
    if (j.at("schema_hash").get<std::string>() != f.schema_hash()) throw ValidationError("forest schema hash mismatch");
    for (const auto& jt : j.at("trees")) {
      DecisionTree t;
      const auto feature = jt.at("feature").get<std::vector<int>>();
      const auto threshold = jt.at("threshold").get<std::vector<double>>();
      const auto left = jt.at("left").get<std::vector<int>>();
      const auto right = jt.at("right").get<std::vector<int>>();
      const auto value = jt.at("value").get<std::vector<std::vector<double>>>();
      const std::size_t n = feature.size();
      if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n || n == 0) {
        throw ValidationError("forest tree arrays have inconsistent lengths");
      }
      for (std::size_t i = 0; i < n; ++i) {
        TreeNode node{feature[i], threshold[i], left[i], right[i], value[i]};
        if (node.feature >= 0) {
          const auto bad = [&](int k) { return k <= static_cast<int>(i) || k >= static_cast<int>(n); };
          if (static_cast<std::size_t>(node.feature) >= f.features.size() || bad(node.left) || bad(node.right)) {
            throw ValidationError("forest tree has an invalid node");
          }
        } else if (node.value.empty()) {
          throw ValidationError("forest leaf without a value");
        }
        t.nodes.push_back(std::move(node));
      }
      f.trees.push_back(std::move(t));
    }
    if (f.trees.empty()) throw ValidationError("forest has no trees");
    return f;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("forest: ") + e.what());
  }
}

}  // namespace hydrocast
