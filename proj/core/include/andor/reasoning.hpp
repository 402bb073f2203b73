#pragma once

// Ground-truth reasoning sets: which inputs of a sample determine its label.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "andor/logic.hpp"

namespace andor {

/// Subset of input indices, l <= 64.
class InputSet {
 public:
  constexpr InputSet() = default;
  constexpr explicit InputSet(std::uint64_t bits) : bits_(bits) {}
  static InputSet range(std::size_t begin, std::size_t end);
  static InputSet of(std::initializer_list<std::size_t> indices);

  std::uint64_t bits() const { return bits_; }
  bool contains(std::size_t i) const { return (bits_ >> i) & 1U; }
  std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
  bool empty() const { return bits_ == 0; }
  void insert(std::size_t i) { bits_ |= std::uint64_t{1} << i; }
  void erase(std::size_t i) { bits_ &= ~(std::uint64_t{1} << i); }

  std::vector<std::size_t> indices() const;

  friend InputSet operator|(InputSet a, InputSet b) { return InputSet(a.bits_ | b.bits_); }
  friend InputSet operator&(InputSet a, InputSet b) { return InputSet(a.bits_ & b.bits_); }
  friend bool operator==(InputSet a, InputSet b) = default;
  /// Lexicographic order of the sorted index lists.
  friend bool operator<(InputSet a, InputSet b);

 private:
  std::uint64_t bits_ = 0;
};

struct ReasoningSets {
  std::size_t sample_id = 0;
  std::vector<InputSet> r_min;  // sorted, all of one cardinality
  InputSet relevant;            // union of r_min

  std::size_t min_size() const { return r_min.empty() ? 0 : r_min.front().size(); }
};

struct OracleBudget {
  std::size_t max_inputs = 12;
  std::size_t max_values = 4;
};

/// True iff the label is constant over every completion of the inputs
/// outside `subset`.
bool is_sufficient(const FormulaSpec& spec, const Domain& domain, const Sample& sample, InputSet subset);

/// Exhaustive search in ascending cardinality. Throws BudgetError when the
/// formula exceeds `budget`.
ReasoningSets brute_force_r_min(const FormulaSpec& spec, const Domain& domain, const Sample& sample,
                                const OracleBudget& budget = {});

/// Composes per-gate minimal certificates with top-level certificates.
ReasoningSets structural_r_min(const FormulaSpec& spec, const Domain& domain, const Sample& sample);

InputSet relevant_inputs(const ReasoningSets& sets);

/// 1.0 on the lexicographically first minimal set, 0.5 on other relevant
/// inputs, 0.0 elsewhere.
std::vector<double> oracle_scores(const FormulaSpec& spec, const ReasoningSets& sets);

std::vector<ReasoningSets> structural_r_min_all(const Dataset& dataset);

/// One JSON object per line: sample_id, r_min, relevant.
std::string reasoning_to_jsonl(const std::vector<ReasoningSets>& sets);
std::vector<ReasoningSets> reasoning_from_jsonl(const std::string& text);

}  // namespace andor
