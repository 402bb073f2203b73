#pragma once

// Sample-level data plumbing shared by training and the experiment grid:
// numeric matrices, stratified splits, k-fold partitions and oversampling.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "andor/logic.hpp"

namespace andor {

/// Dense row-major feature matrix with integer labels.
struct LabeledData {
  std::size_t cols = 0;
  std::vector<double> x;
  std::vector<int> y;

  std::size_t rows() const { return y.size(); }
  std::span<const double> row(std::size_t i) const { return {x.data() + i * cols, cols}; }
  void push(std::span<const double> features, int label);
  std::size_t count_label(int label) const;
};

LabeledData to_labeled(const Dataset& dataset, std::span<const std::size_t> indices);
LabeledData to_labeled(const Dataset& dataset);

/// Duplicates minority-class rows, drawn uniformly with replacement, until
/// both classes have equal counts. Throws InputError for single-class data.
LabeledData oversample_balance(const LabeledData& data, std::uint64_t seed);

/// Same balancing on index lists: returns `indices` plus the duplicates.
std::vector<std::size_t> oversample_indices(std::span<const std::size_t> indices, std::span<const int> labels,
                                            std::uint64_t seed);

enum class SplitMode { Split, NotSplit };

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Split mode: disjoint stratified split with round(train_ratio * n_class)
/// training rows per class. NotSplit: both sides are the full dataset.
SplitIndices split_dataset(std::span<const int> labels, SplitMode mode, double train_ratio, std::uint64_t seed);

/// Stratified k-fold partition of `indices`; returns the validation fold of
/// each of the k folds.
std::vector<std::vector<std::size_t>> stratified_folds(std::span<const std::size_t> indices,
                                                       std::span<const int> labels, std::size_t folds,
                                                       std::uint64_t seed);

/// splitmix64 mixing used to derive independent seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace andor
