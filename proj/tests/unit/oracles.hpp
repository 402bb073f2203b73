#pragma once

// Reference implementations used only by tests. They are deliberately
// naive: explicit loops over values and completions, no shared code with the
// library's evaluators beyond the data types.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "andor/logic.hpp"
#include "andor/reasoning.hpp"

namespace oracle {

using namespace andor;

inline bool positive_value(const Domain& d, ValueIndex v) {
  const auto pos = d.positives();
  return std::find(pos.begin(), pos.end(), d.values()[v]) != pos.end();
}

inline bool gate_truth(GateKind kind, std::size_t positives, std::size_t total) {
  switch (kind) {
    case GateKind::And: return positives == total;
    case GateKind::Or: return positives > 0;
    case GateKind::Xor: return positives == 1;
  }
  return false;
}

inline int label(const FormulaSpec& spec, const Domain& d, const std::vector<ValueIndex>& x) {
  std::size_t trues = 0;
  for (const Gate& g : spec.gates()) {
    std::size_t pos = 0;
    for (std::size_t i = g.begin; i < g.end; ++i) pos += positive_value(d, x[i]) ? 1 : 0;
    trues += gate_truth(g.kind, pos, g.size()) ? 1 : 0;
  }
  return gate_truth(spec.top_level(), trues, spec.gates().size()) ? 1 : 0;
}

/// Labels reachable over every completion of the masked entries, with counts.
struct Completions {
  std::size_t zeros = 0;
  std::size_t ones = 0;
};

inline Completions complete(const FormulaSpec& spec, const Domain& d, const std::vector<ValueIndex>& entries) {
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i] == kMasked) free.push_back(i);
  }
  std::vector<ValueIndex> x = entries;
  for (std::size_t i : free) x[i] = 0;
  Completions c;
  while (true) {
    (label(spec, d, x) ? c.ones : c.zeros) += 1;
    std::size_t p = 0;
    for (; p < free.size(); ++p) {
      if (++x[free[p]] < d.size()) break;
      x[free[p]] = 0;
    }
    if (p == free.size()) break;
  }
  return c;
}

inline TriValue tri(const FormulaSpec& spec, const Domain& d, const std::vector<ValueIndex>& entries) {
  const auto c = complete(spec, d, entries);
  if (c.zeros && c.ones) return TriValue::Unknown;
  return c.ones ? TriValue::True : TriValue::False;
}

inline double prob1(const FormulaSpec& spec, const Domain& d, const std::vector<ValueIndex>& entries) {
  const auto c = complete(spec, d, entries);
  return static_cast<double>(c.ones) / static_cast<double>(c.ones + c.zeros);
}

/// Every minimum-cardinality sufficient subset, by exhaustive subset scan.
inline std::vector<InputSet> r_min(const FormulaSpec& spec, const Domain& d, const Sample& s) {
  const std::size_t l = spec.input_len();
  std::vector<std::vector<InputSet>> by_size(l + 1);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << l); ++bits) {
    std::vector<ValueIndex> entries(l, kMasked);
    for (std::size_t i = 0; i < l; ++i) {
      if ((bits >> i) & 1U) entries[i] = s.inputs[i];
    }
    const auto c = complete(spec, d, entries);
    if ((s.label == 1 && c.zeros == 0) || (s.label == 0 && c.ones == 0)) {
      by_size[static_cast<std::size_t>(__builtin_popcountll(bits))].push_back(InputSet(bits));
    }
  }
  for (auto& level : by_size) {
    if (!level.empty()) {
      std::sort(level.begin(), level.end());
      return level;
    }
  }
  return {};
}

inline std::vector<ValueIndex> random_mask(const std::vector<ValueIndex>& x, std::mt19937_64& rng) {
  std::vector<ValueIndex> out = x;
  for (auto& v : out) {
    if (rng() & 1U) v = kMasked;
  }
  return out;
}

}  // namespace oracle
