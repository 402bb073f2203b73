#pragma once

// Two-layer ANDOR formulas: blocks of AND/OR/XOR gates plus an unconnected
// baseline block, combined by one top-level gate. Inputs are stored as
// indices into the domain alphabet; kMasked marks an absent input.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "andor/rational.hpp"

namespace andor {

using ValueIndex = std::uint8_t;
inline constexpr ValueIndex kMasked = 0xFF;
inline constexpr std::size_t kMaxDomainSize = 254;

/// Input alphabet M with its positive subset T.
class Domain {
 public:
  /// Throws ConfigError unless values are distinct, exclude 0, and T is a
  /// nonempty proper subset of the values.
  Domain(std::vector<Rational> values, const std::vector<Rational>& positives);

  std::size_t size() const { return values_.size(); }
  std::size_t positive_count() const { return positive_count_; }
  const std::vector<Rational>& values() const { return values_; }
  std::vector<Rational> positives() const;

  bool is_positive(ValueIndex v) const { return positive_[v]; }
  const Rational& value(ValueIndex v) const { return values_[v]; }
  double numeric(ValueIndex v) const { return v == kMasked ? 0.0 : numeric_[v]; }
  std::optional<ValueIndex> index_of(const Rational& r) const;
  /// Nearest-value lookup for values read back from floating point text.
  std::optional<ValueIndex> index_of_numeric(double x, double tol = 1e-9) const;

  /// |T| / |M|: probability that a uniformly completed slot is positive.
  double positive_rate() const {
    return static_cast<double>(positive_count_) / static_cast<double>(values_.size());
  }

  friend bool operator==(const Domain& a, const Domain& b) { return a.values_ == b.values_ && a.positive_ == b.positive_; }

 private:
  std::vector<Rational> values_;
  std::vector<bool> positive_;
  std::vector<double> numeric_;
  std::size_t positive_count_ = 0;
};

enum class GateKind { And, Or, Xor };

std::string_view to_string(GateKind kind);
GateKind parse_gate_kind(std::string_view name);

/// Block layout of a formula; one entry per logic block in fixed order
/// AND, OR, XOR, then the baseline block.
struct BlockSpec {
  std::size_t stacks = 0;
  std::size_t gate_len = 1;
};

struct Gate {
  GateKind kind;
  std::size_t begin;  // first input index
  std::size_t end;    // one past the last input index
  std::size_t size() const { return end - begin; }
};

class FormulaSpec {
 public:
  FormulaSpec(BlockSpec and_block, BlockSpec or_block, BlockSpec xor_block, std::size_t baseline_len,
              GateKind top_level);

  const BlockSpec& block(GateKind kind) const { return blocks_[static_cast<int>(kind)]; }
  std::size_t baseline_len() const { return baseline_len_; }
  GateKind top_level() const { return top_level_; }

  /// Total input length l.
  std::size_t input_len() const { return input_len_; }
  std::size_t baseline_begin() const { return input_len_ - baseline_len_; }
  bool is_baseline(std::size_t index) const { return index >= baseline_begin(); }

  const std::vector<Gate>& gates() const { return gates_; }
  /// Gate owning an input index, or nullopt for baseline indices.
  std::optional<std::size_t> gate_of(std::size_t index) const;

  FormulaSpec with_top_level(GateKind top) const;

  friend bool operator==(const FormulaSpec& a, const FormulaSpec& b);

 private:
  BlockSpec blocks_[3];
  std::size_t baseline_len_;
  GateKind top_level_;
  std::size_t input_len_ = 0;
  std::vector<Gate> gates_;
  std::vector<std::int32_t> gate_of_;
};

struct Sample {
  std::vector<ValueIndex> inputs;
  int label = 0;
};

/// Entries are domain indices or kMasked.
struct MaskedSample {
  std::vector<ValueIndex> entries;
  std::size_t masked_count() const;
};

struct Dataset {
  FormulaSpec spec;
  Domain domain;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  std::size_t count_label(int label) const;
};

enum class TriValue { False, True, Unknown };

std::string_view to_string(TriValue v);

// ---- evaluation ----------------------------------------------------------

/// And = all, Or = any, Xor = exactly one. Throws ConfigError on empty input.
bool eval_gate(GateKind kind, std::span<const bool> inputs);

/// Gate truth value from the count of positive inputs.
bool eval_gate_count(GateKind kind, std::size_t positives, std::size_t total);

/// Label (0/1) of a fully specified sample. Throws InputError for length
/// mismatch or out-of-domain entries.
int eval_sample(const FormulaSpec& spec, const Domain& domain, std::span<const ValueIndex> inputs);

/// Truth values of every gate of an unmasked sample.
std::vector<bool> gate_values(const FormulaSpec& spec, const Domain& domain, std::span<const ValueIndex> inputs);

/// Kleene-style three-valued evaluation of a masked sample. Exact for ANDOR
/// formulas: True/False iff every completion has that label.
TriValue tri_eval(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked);

/// Three-valued gate from known positive/negative counts and masked slots.
TriValue tri_gate(GateKind kind, std::size_t known_pos, std::size_t known_neg, std::size_t masked);

/// P(label = 1) when each masked slot is uniform over the alphabet.
double class_prob(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked);

// ---- enumeration ---------------------------------------------------------

inline constexpr std::size_t kDefaultEnumerationBudget = std::size_t{1} << 22;

/// All |M|^l samples in lexicographic order (input 0 varies slowest).
/// Throws BudgetError with the size estimate if the budget is exceeded.
Dataset enumerate_dataset(const FormulaSpec& spec, const Domain& domain,
                          std::size_t budget = kDefaultEnumerationBudget);

/// Uniformly drawn samples, for alphabets too large to enumerate.
Dataset sample_dataset(const FormulaSpec& spec, const Domain& domain, std::size_t count, std::uint64_t seed);

/// Numeric model input (mask token 0 for kMasked entries).
std::vector<double> to_numeric(const Domain& domain, std::span<const ValueIndex> entries);

// ---- presets -------------------------------------------------------------

struct Preset {
  std::string name;
  FormulaSpec spec;
  Domain domain;
};

/// "2inBinary", "2inQuaternary" or "3inBinary" with the given top level.
Preset make_preset(std::string_view name, GateKind top_level);
std::vector<std::string> preset_names();

}  // namespace andor
