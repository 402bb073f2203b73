#include "andor/data.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "andor/errors.hpp"

namespace andor {

void LabeledData::push(std::span<const double> features, int label) {
  if (cols == 0 && y.empty()) cols = features.size();
  if (features.size() != cols) throw InputError("row width mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(label);
}

std::size_t LabeledData::count_label(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

LabeledData to_labeled(const Dataset& dataset, std::span<const std::size_t> indices) {
  LabeledData out;
  out.cols = dataset.spec.input_len();
  out.x.reserve(indices.size() * out.cols);
  out.y.reserve(indices.size());
  for (std::size_t i : indices) {
    const Sample& s = dataset.samples.at(i);
    out.push(to_numeric(dataset.domain, s.inputs), s.label);
  }
  return out;
}

LabeledData to_labeled(const Dataset& dataset) {
  std::vector<std::size_t> all(dataset.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return to_labeled(dataset, all);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Index in [0, n) without the implementation-defined uniform_int_distribution.
std::size_t draw_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[draw_index(rng, i)]);
}

}  // namespace

std::vector<std::size_t> oversample_indices(std::span<const std::size_t> indices, std::span<const int> labels,
                                            std::uint64_t seed) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i : indices) by_class[labels[i] != 0 ? 1 : 0].push_back(i);
  if (by_class[0].empty() || by_class[1].empty()) throw InputError("oversampling needs both classes present");
  std::vector<std::size_t> out(indices.begin(), indices.end());
  const int minority = by_class[0].size() < by_class[1].size() ? 0 : 1;
  const std::size_t deficit = by_class[1 - minority].size() - by_class[minority].size();
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k < deficit; ++k) out.push_back(by_class[minority][draw_index(rng, by_class[minority].size())]);
  return out;
}

LabeledData oversample_balance(const LabeledData& data, std::uint64_t seed) {
  std::vector<std::size_t> rows(data.rows());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto picked = oversample_indices(rows, data.y, seed);
  LabeledData out;
  out.cols = data.cols;
  for (std::size_t i : picked) out.push(data.row(i), data.y[i]);
  return out;
}

SplitIndices split_dataset(std::span<const int> labels, SplitMode mode, double train_ratio, std::uint64_t seed) {
  SplitIndices out;
  if (mode == SplitMode::NotSplit) {
    for (std::size_t i = 0; i < labels.size(); ++i) out.train.push_back(i);
    out.test = out.train;
    return out;
  }
  if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if ((labels[i] != 0 ? 1 : 0) == c) members.push_back(i);
    }
    shuffle(members, rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(members.size())));
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::vector<std::size_t>> stratified_folds(std::span<const std::size_t> indices,
                                                       std::span<const int> labels, std::size_t folds,
                                                       std::uint64_t seed) {
  if (folds < 2) throw ConfigError("at least two folds are required");
  std::vector<std::vector<std::size_t>> out(folds);
  std::mt19937_64 rng(seed);
  std::size_t next = 0;
  for (int c = 0; c < 2; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i : indices) {
      if ((labels[i] != 0 ? 1 : 0) == c) members.push_back(i);
    }
    shuffle(members, rng);
    // Continue the round-robin across classes so fold sizes stay balanced.
    for (std::size_t i : members) out[next++ % folds].push_back(i);
  }
  for (auto& f : out) std::sort(f.begin(), f.end());
  return out;
}

}  // namespace andor
