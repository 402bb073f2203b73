#include "andor/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "andor/errors.hpp"

namespace andor {

void ForestConfig::validate() const {
  if (n_trees == 0) throw ConfigError("forest needs at least one tree");
  if (max_depth == 0) throw ConfigError("max_depth must be positive");
}

double Tree::predict_p1(std::span<const double> x) const {
  int n = 0;
  while (nodes[static_cast<std::size_t>(n)].feature >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(n)];
    n = x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<std::size_t>(n)].p1;
}

double Forest::predict_p1(std::span<const double> x) const {
  double s = 0.0;
  for (const auto& t : trees_) s += t.predict_p1(x);
  return s / static_cast<double>(trees_.size());
}

int Forest::predict(std::span<const double> x) const { return predict_p1(x) > 0.5 ? 1 : 0; }

namespace {

double gini(double n0, double n1) {
  const double n = n0 + n1;
  if (n == 0.0) return 0.0;
  const double p0 = n0 / n, p1 = n1 / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

class TreeBuilder {
 public:
  TreeBuilder(const LabeledData& data, const ForestConfig& cfg, std::size_t mtry, std::mt19937_64& rng,
              std::vector<double>& importance)
      : data_(data), cfg_(cfg), mtry_(mtry), rng_(rng), importance_(importance) {}

  Tree build(std::vector<std::size_t> rows) {
    total_ = static_cast<double>(rows.size());
    grow(rows, 0);
    return std::move(tree_);
  }

 private:
  int grow(std::vector<std::size_t>& rows, std::size_t depth) {
    const int id = static_cast<int>(tree_.nodes.size());
    tree_.nodes.emplace_back();
    double n1 = 0.0;
    for (std::size_t r : rows) n1 += data_.y[r] != 0 ? 1.0 : 0.0;
    const double n = static_cast<double>(rows.size());
    tree_.nodes[static_cast<std::size_t>(id)].p1 = n1 / n;
    const double parent = gini(n - n1, n1);
    if (parent == 0.0 || depth >= cfg_.max_depth || rows.size() < 2) return id;

    // Random candidate features (partial Fisher-Yates).
    std::vector<std::size_t> features(data_.cols);
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::swap(features[i], features[i + rng_() % (features.size() - i)]);
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = -1.0;
    std::vector<std::pair<double, int>> col(rows.size());
    for (std::size_t f = 0; f < mtry_; ++f) {
      const std::size_t feat = features[f];
      for (std::size_t i = 0; i < rows.size(); ++i) col[i] = {data_.row(rows[i])[feat], data_.y[rows[i]]};
      std::sort(col.begin(), col.end());
      double left0 = 0.0, left1 = 0.0;
      for (std::size_t i = 0; i + 1 < col.size(); ++i) {
        (col[i].second != 0 ? left1 : left0) += 1.0;
        if (col[i].first == col[i + 1].first) continue;
        const double nl = left0 + left1, nr = n - nl;
        const double child = (nl * gini(left0, left1) + nr * gini(n - n1 - left0, n1 - left1)) / n;
        const double gain = parent - child;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(feat);
          best_threshold = 0.5 * (col[i].first + col[i + 1].first);
        }
      }
    }
    if (best_feature < 0) return id;

    importance_[static_cast<std::size_t>(best_feature)] += std::max(0.0, best_gain) * n / total_;
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (data_.row(r)[static_cast<std::size_t>(best_feature)] <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    TreeNode& node = tree_.nodes[static_cast<std::size_t>(id)];
    node.feature = best_feature;
    node.threshold = best_threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  const LabeledData& data_;
  const ForestConfig& cfg_;
  std::size_t mtry_;
  std::mt19937_64& rng_;
  std::vector<double>& importance_;
  Tree tree_;
  double total_ = 1.0;
};

}  // namespace

Forest train_forest(const ForestConfig& config, const LabeledData& train) {
  config.validate();
  if (train.rows() == 0) throw InputError("empty training set");
  const std::size_t l = train.cols;
  std::size_t mtry = config.features_per_split;
  if (mtry == 0) mtry = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(l))));
  mtry = std::min(mtry, l);

  std::mt19937_64 rng(config.seed);
  std::vector<double> importance(l, 0.0);
  std::vector<Tree> trees;
  trees.reserve(config.n_trees);
  for (std::size_t t = 0; t < config.n_trees; ++t) {
    std::vector<std::size_t> rows(train.rows());
    if (config.bootstrap) {
      for (auto& r : rows) r = rng() % train.rows();
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    TreeBuilder builder(train, config, mtry, rng, importance);
    trees.push_back(builder.build(std::move(rows)));
  }
  const double sum = std::accumulate(importance.begin(), importance.end(), 0.0);
  if (sum > 0.0) {
    for (double& v : importance) v /= sum;
  }
  return Forest(std::move(trees), std::move(importance));
}

}  // namespace andor
