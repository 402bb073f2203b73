#include "andor/logic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <set>

#include "andor/errors.hpp"

namespace andor {

// ---- Domain --------------------------------------------------------------

Domain::Domain(std::vector<Rational> values, const std::vector<Rational>& positives)
    : values_(std::move(values)) {
  if (values_.size() < 2) throw ConfigError("domain needs at least two values");
  if (values_.size() > kMaxDomainSize) throw ConfigError("domain has too many values");
  std::set<Rational> seen;
  for (const auto& v : values_) {
    if (v.is_zero()) throw ConfigError("domain must not contain the mask token 0");
    if (!seen.insert(v).second) throw ConfigError("duplicate domain value " + v.to_string());
  }
  positive_.assign(values_.size(), false);
  for (const auto& p : positives) {
    auto idx = index_of(p);
    if (!idx) throw ConfigError("positive value " + p.to_string() + " is not in the domain");
    if (positive_[*idx]) throw ConfigError("duplicate positive value " + p.to_string());
    positive_[*idx] = true;
    ++positive_count_;
  }
  if (positive_count_ == 0) throw ConfigError("positive set must be nonempty");
  if (positive_count_ == values_.size()) throw ConfigError("positive set must be a proper subset");
  numeric_.reserve(values_.size());
  for (const auto& v : values_) numeric_.push_back(v.to_double());
}

std::vector<Rational> Domain::positives() const {
  std::vector<Rational> out;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (positive_[i]) out.push_back(values_[i]);
  }
  return out;
}

std::optional<ValueIndex> Domain::index_of(const Rational& r) const {
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == r) return static_cast<ValueIndex>(i);
  }
  return std::nullopt;
}

std::optional<ValueIndex> Domain::index_of_numeric(double x, double tol) const {
  for (std::size_t i = 0; i < numeric_.size(); ++i) {
    if (std::abs(numeric_[i] - x) <= tol) return static_cast<ValueIndex>(i);
  }
  return std::nullopt;
}

// ---- names ---------------------------------------------------------------

std::string_view to_string(GateKind kind) {
  switch (kind) {
    case GateKind::And: return "and";
    case GateKind::Or: return "or";
    case GateKind::Xor: return "xor";
  }
  return "?";
}

GateKind parse_gate_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "and") return GateKind::And;
  if (lower == "or") return GateKind::Or;
  if (lower == "xor") return GateKind::Xor;
  throw ConfigError("unknown gate kind '" + std::string(name) + "'");
}

std::string_view to_string(TriValue v) {
  switch (v) {
    case TriValue::False: return "false";
    case TriValue::True: return "true";
    case TriValue::Unknown: return "unknown";
  }
  return "?";
}

// ---- FormulaSpec ---------------------------------------------------------

FormulaSpec::FormulaSpec(BlockSpec and_block, BlockSpec or_block, BlockSpec xor_block, std::size_t baseline_len,
                         GateKind top_level)
    : blocks_{and_block, or_block, xor_block}, baseline_len_(baseline_len), top_level_(top_level) {
  const GateKind kinds[] = {GateKind::And, GateKind::Or, GateKind::Xor};
  std::size_t offset = 0;
  for (int b = 0; b < 3; ++b) {
    if (blocks_[b].stacks > 0 && blocks_[b].gate_len == 0) {
      throw ConfigError("gate length must be positive in the " + std::string(to_string(kinds[b])) + " block");
    }
    for (std::size_t s = 0; s < blocks_[b].stacks; ++s) {
      gates_.push_back(Gate{kinds[b], offset, offset + blocks_[b].gate_len});
      offset += blocks_[b].gate_len;
    }
  }
  if (gates_.empty()) throw ConfigError("formula needs at least one logic gate");
  input_len_ = offset + baseline_len_;
  gate_of_.assign(input_len_, -1);
  for (std::size_t g = 0; g < gates_.size(); ++g) {
    for (std::size_t i = gates_[g].begin; i < gates_[g].end; ++i) gate_of_[i] = static_cast<std::int32_t>(g);
  }
}

std::optional<std::size_t> FormulaSpec::gate_of(std::size_t index) const {
  if (index >= input_len_ || gate_of_[index] < 0) return std::nullopt;
  return static_cast<std::size_t>(gate_of_[index]);
}

FormulaSpec FormulaSpec::with_top_level(GateKind top) const {
  return FormulaSpec(blocks_[0], blocks_[1], blocks_[2], baseline_len_, top);
}

bool operator==(const FormulaSpec& a, const FormulaSpec& b) {
  for (int i = 0; i < 3; ++i) {
    if (a.blocks_[i].stacks != b.blocks_[i].stacks || a.blocks_[i].gate_len != b.blocks_[i].gate_len) return false;
  }
  return a.baseline_len_ == b.baseline_len_ && a.top_level_ == b.top_level_;
}

std::size_t MaskedSample::masked_count() const {
  return static_cast<std::size_t>(std::count(entries.begin(), entries.end(), kMasked));
}

std::size_t Dataset::count_label(int label) const {
  return static_cast<std::size_t>(
      std::count_if(samples.begin(), samples.end(), [label](const Sample& s) { return s.label == label; }));
}

// ---- evaluation ----------------------------------------------------------

bool eval_gate_count(GateKind kind, std::size_t positives, std::size_t total) {
  switch (kind) {
    case GateKind::And: return positives == total;
    case GateKind::Or: return positives > 0;
    case GateKind::Xor: return positives == 1;
  }
  return false;
}

bool eval_gate(GateKind kind, std::span<const bool> inputs) {
  if (inputs.empty()) throw ConfigError("gate evaluated on an empty input list");
  const auto positives = static_cast<std::size_t>(std::count(inputs.begin(), inputs.end(), true));
  return eval_gate_count(kind, positives, inputs.size());
}

namespace {

void check_inputs(const FormulaSpec& spec, const Domain& domain, std::span<const ValueIndex> inputs,
                  bool allow_masked) {
  if (inputs.size() != spec.input_len()) {
    throw InputError("sample has " + std::to_string(inputs.size()) + " inputs, formula expects " +
                     std::to_string(spec.input_len()));
  }
  for (ValueIndex v : inputs) {
    if (v == kMasked && allow_masked) continue;
    if (v >= domain.size()) throw InputError("input value outside the domain");
  }
}

std::size_t count_positive(const Domain& domain, std::span<const ValueIndex> inputs, const Gate& g) {
  std::size_t n = 0;
  for (std::size_t i = g.begin; i < g.end; ++i) n += domain.is_positive(inputs[i]) ? 1 : 0;
  return n;
}

}  // namespace

std::vector<bool> gate_values(const FormulaSpec& spec, const Domain& domain, std::span<const ValueIndex> inputs) {
  check_inputs(spec, domain, inputs, false);
  std::vector<bool> out;
  out.reserve(spec.gates().size());
  for (const Gate& g : spec.gates()) out.push_back(eval_gate_count(g.kind, count_positive(domain, inputs, g), g.size()));
  return out;
}

int eval_sample(const FormulaSpec& spec, const Domain& domain, std::span<const ValueIndex> inputs) {
  check_inputs(spec, domain, inputs, false);
  std::size_t true_gates = 0;
  for (const Gate& g : spec.gates()) {
    true_gates += eval_gate_count(g.kind, count_positive(domain, inputs, g), g.size()) ? 1 : 0;
  }
  return eval_gate_count(spec.top_level(), true_gates, spec.gates().size()) ? 1 : 0;
}

TriValue tri_gate(GateKind kind, std::size_t known_pos, std::size_t known_neg, std::size_t masked) {
  switch (kind) {
    case GateKind::And:
      if (known_neg > 0) return TriValue::False;
      return masked == 0 ? TriValue::True : TriValue::Unknown;
    case GateKind::Or:
      if (known_pos > 0) return TriValue::True;
      return masked == 0 ? TriValue::False : TriValue::Unknown;
    case GateKind::Xor:
      if (known_pos >= 2) return TriValue::False;
      if (masked > 0) return TriValue::Unknown;
      return known_pos == 1 ? TriValue::True : TriValue::False;
  }
  return TriValue::Unknown;
}

TriValue tri_eval(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked) {
  check_inputs(spec, domain, masked.entries, true);
  std::size_t t = 0, f = 0, u = 0;
  for (const Gate& g : spec.gates()) {
    std::size_t pos = 0, neg = 0, unk = 0;
    for (std::size_t i = g.begin; i < g.end; ++i) {
      const ValueIndex v = masked.entries[i];
      if (v == kMasked) ++unk;
      else if (domain.is_positive(v)) ++pos;
      else ++neg;
    }
    switch (tri_gate(g.kind, pos, neg, unk)) {
      case TriValue::True: ++t; break;
      case TriValue::False: ++f; break;
      case TriValue::Unknown: ++u; break;
    }
  }
  return tri_gate(spec.top_level(), t, f, u);
}

namespace {

// P(gate true) with `masked` free slots, each positive with probability q.
double gate_true_prob(GateKind kind, std::size_t known_pos, std::size_t known_neg, std::size_t masked, double q) {
  const double m = static_cast<double>(masked);
  switch (kind) {
    case GateKind::And:
      return known_neg > 0 ? 0.0 : std::pow(q, m);
    case GateKind::Or:
      return known_pos > 0 ? 1.0 : 1.0 - std::pow(1.0 - q, m);
    case GateKind::Xor:
      if (known_pos >= 2) return 0.0;
      if (known_pos == 1) return std::pow(1.0 - q, m);
      return masked == 0 ? 0.0 : m * q * std::pow(1.0 - q, m - 1.0);
  }
  return 0.0;
}

}  // namespace

double class_prob(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked) {
  check_inputs(spec, domain, masked.entries, true);
  const double q = domain.positive_rate();
  std::vector<double> p;
  p.reserve(spec.gates().size());
  for (const Gate& g : spec.gates()) {
    std::size_t pos = 0, neg = 0, unk = 0;
    for (std::size_t i = g.begin; i < g.end; ++i) {
      const ValueIndex v = masked.entries[i];
      if (v == kMasked) ++unk;
      else if (domain.is_positive(v)) ++pos;
      else ++neg;
    }
    p.push_back(gate_true_prob(g.kind, pos, neg, unk, q));
  }
  switch (spec.top_level()) {
    case GateKind::And: {
      double prod = 1.0;
      for (double pi : p) prod *= pi;
      return prod;
    }
    case GateKind::Or: {
      double none = 1.0;
      for (double pi : p) none *= 1.0 - pi;
      return 1.0 - none;
    }
    case GateKind::Xor: {
      double sum = 0.0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        double term = p[i];
        for (std::size_t j = 0; j < p.size(); ++j) {
          if (j != i) term *= 1.0 - p[j];
        }
        sum += term;
      }
      return sum;
    }
  }
  return 0.0;
}

// ---- enumeration ---------------------------------------------------------

Dataset enumerate_dataset(const FormulaSpec& spec, const Domain& domain, std::size_t budget) {
  const std::size_t l = spec.input_len();
  const double estimate = std::pow(static_cast<double>(domain.size()), static_cast<double>(l));
  if (estimate > static_cast<double>(budget)) {
    throw BudgetError("enumeration of " + std::to_string(domain.size()) + "^" + std::to_string(l) + " = " +
                      std::to_string(static_cast<long double>(estimate)) + " samples exceeds the budget of " +
                      std::to_string(budget) + "; use sampled mode");
  }
  const auto total = static_cast<std::size_t>(estimate);
  Dataset ds{spec, domain, {}};
  ds.samples.reserve(total);
  std::vector<ValueIndex> current(l, 0);
  const auto base = static_cast<ValueIndex>(domain.size());
  for (std::size_t n = 0; n < total; ++n) {
    ds.samples.push_back(Sample{current, eval_sample(spec, domain, current)});
    for (std::size_t pos = l; pos-- > 0;) {
      if (++current[pos] < base) break;
      current[pos] = 0;
    }
  }
  return ds;
}

Dataset sample_dataset(const FormulaSpec& spec, const Domain& domain, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds{spec, domain, {}};
  ds.samples.reserve(count);
  std::vector<ValueIndex> current(spec.input_len());
  for (std::size_t n = 0; n < count; ++n) {
    for (auto& v : current) v = static_cast<ValueIndex>(rng() % domain.size());
    ds.samples.push_back(Sample{current, eval_sample(spec, domain, current)});
  }
  return ds;
}

std::vector<double> to_numeric(const Domain& domain, std::span<const ValueIndex> entries) {
  std::vector<double> out;
  out.reserve(entries.size());
  for (ValueIndex v : entries) out.push_back(domain.numeric(v));
  return out;
}

// ---- presets -------------------------------------------------------------

std::vector<std::string> preset_names() { return {"2inBinary", "2inQuaternary", "3inBinary"}; }

Preset make_preset(std::string_view name, GateKind top_level) {
  const Domain binary({Rational(-1), Rational(1)}, {Rational(1)});
  const Domain quaternary({Rational(-1), Rational(-1, 3), Rational(1, 3), Rational(1)},
                          {Rational(-1, 3), Rational(1)});
  auto layout = [top_level](std::size_t len) {
    return FormulaSpec(BlockSpec{1, len}, BlockSpec{1, len}, BlockSpec{1, len}, len, top_level);
  };
  if (name == "2inBinary") return Preset{std::string(name), layout(2), binary};
  if (name == "2inQuaternary") return Preset{std::string(name), layout(2), quaternary};
  if (name == "3inBinary") return Preset{std::string(name), layout(3), binary};
  throw ConfigError("unknown preset '" + std::string(name) + "'");
}

}  // namespace andor
