#pragma once

// Bagged CART classification forest with Gini splits, used as the
// comparison model for global feature importance.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "andor/data.hpp"

namespace andor {

struct ForestConfig {
  std::size_t n_trees = 100;
  std::size_t max_depth = 16;
  std::size_t features_per_split = 0;  // 0 = ceil(sqrt(l))
  bool bootstrap = true;
  std::uint64_t seed = 0;

  void validate() const;
};

struct TreeNode {
  // Leaf when feature < 0.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double p1 = 0.0;  // fraction of class 1 among training rows reaching the node
};

struct Tree {
  std::vector<TreeNode> nodes;
  double predict_p1(std::span<const double> x) const;
};

class Forest {
 public:
  Forest(std::vector<Tree> trees, std::vector<double> importances)
      : trees_(std::move(trees)), importances_(std::move(importances)) {}

  int predict(std::span<const double> x) const;
  double predict_p1(std::span<const double> x) const;
  const std::vector<Tree>& trees() const { return trees_; }
  /// Impurity decrease per feature, normalized to sum 1 (all zero when no
  /// split was ever made).
  const std::vector<double>& gini_importances() const { return importances_; }

 private:
  std::vector<Tree> trees_;
  std::vector<double> importances_;
};

Forest train_forest(const ForestConfig& config, const LabeledData& train);

}  // namespace andor
