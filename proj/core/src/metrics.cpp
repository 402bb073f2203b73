#include "andor/metrics.hpp"

#include <algorithm>
#include <map>

#include "andor/errors.hpp"

namespace andor {

ClassRate rate_by_class(const std::vector<bool>& flags, std::span<const int> labels) {
  std::size_t n[3] = {0, 0, 0}, hit[3] = {0, 0, 0};
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const int c = labels[i] != 0 ? 1 : 0;
    ++n[2];
    ++n[c];
    if (flags[i]) {
      ++hit[2];
      ++hit[c];
    }
  }
  auto pct = [&](int k) -> std::optional<double> {
    if (n[k] == 0) return std::nullopt;
    return 100.0 * static_cast<double>(hit[k]) / static_cast<double>(n[k]);
  };
  return ClassRate{pct(2), pct(0), pct(1)};
}

double max_baseline_score(std::span<const double> scores, const FormulaSpec& spec) {
  if (spec.baseline_len() == 0) throw ConfigError("baseline metrics need at least one baseline input");
  if (scores.size() != spec.input_len()) throw InputError("score vector length does not match the formula");
  return *std::max_element(scores.begin() + static_cast<std::ptrdiff_t>(spec.baseline_begin()), scores.end());
}

bool nib_violation(std::span<const double> scores, const ReasoningSets& sets, const FormulaSpec& spec,
                   NibVariant variant) {
  const double b = max_baseline_score(scores, spec);
  auto below = [&](InputSet r) {
    for (std::size_t j : r.indices()) {
      if (scores[j] <= b) return true;
    }
    return false;
  };
  if (variant == NibVariant::Strict) return std::any_of(sets.r_min.begin(), sets.r_min.end(), below);
  return std::all_of(sets.r_min.begin(), sets.r_min.end(), below);
}

bool gib_violation(std::span<const double> scores, const ReasoningSets& sets, const FormulaSpec& spec) {
  const double b = max_baseline_score(scores, spec);
  for (std::size_t j : sets.relevant.indices()) {
    if (scores[j] <= b) return true;
  }
  return false;
}

bool logical_correct(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked, int label) {
  const TriValue v = tri_eval(spec, domain, masked);
  if (v == TriValue::Unknown) return false;
  return (v == TriValue::True ? 1 : 0) == label;
}

int statistical_prediction(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked) {
  return class_prob(spec, domain, masked) > 0.5 ? 1 : 0;
}

double logical_accuracy(const FormulaSpec& spec, const Domain& domain, std::span<const MaskedSample> masked,
                        std::span<const int> labels) {
  if (masked.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < masked.size(); ++i) correct += logical_correct(spec, domain, masked[i], labels[i]) ? 1 : 0;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(masked.size());
}

double statistical_logical_accuracy(const FormulaSpec& spec, const Domain& domain,
                                    std::span<const MaskedSample> masked, std::span<const int> labels) {
  if (masked.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    correct += statistical_prediction(spec, domain, masked[i]) == labels[i] ? 1 : 0;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(masked.size());
}

DcaResult full_dca(const FormulaSpec& spec, std::span<const MaskedSample> masked, std::span<const int> base_pred,
                   std::span<const int> retrained_pred) {
  const std::size_t informative = spec.baseline_begin();
  struct Group {
    std::size_t count = 0;
    bool seen[2] = {false, false};
  };
  std::map<std::vector<ValueIndex>, Group> groups;
  DcaResult out;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (base_pred[i] != retrained_pred[i]) continue;
    ++out.considered;
    std::vector<ValueIndex> key(masked[i].entries.begin(),
                                masked[i].entries.begin() + static_cast<std::ptrdiff_t>(informative));
    Group& g = groups[std::move(key)];
    ++g.count;
    g.seen[retrained_pred[i] != 0 ? 1 : 0] = true;
  }
  out.groups = groups.size();
  for (const auto& [key, g] : groups) {
    if (g.seen[0] && g.seen[1]) {
      ++out.conflicting_groups;
      out.conflicting_samples += g.count;
    }
  }
  if (out.considered > 0) {
    out.sample_weighted = 100.0 * static_cast<double>(out.conflicting_samples) / static_cast<double>(out.considered);
    out.group_weighted = 100.0 * static_cast<double>(out.conflicting_groups) / static_cast<double>(out.groups);
  }
  return out;
}

namespace {

bool top_output(GateKind top, const std::vector<bool>& values) {
  const auto trues = static_cast<std::size_t>(std::count(values.begin(), values.end(), true));
  return eval_gate_count(top, trues, values.size());
}

}  // namespace

bool is_pivotal(const FormulaSpec& spec, const std::vector<bool>& gate_values, std::size_t g) {
  std::vector<bool> flipped = gate_values;
  flipped[g] = !flipped[g];
  return top_output(spec.top_level(), gate_values) != top_output(spec.top_level(), flipped);
}

MinimalDcaResult minimal_dca(const FormulaSpec& spec, const Domain& domain, std::span<const Sample> originals,
                             std::span<const MaskedSample> masked, std::span<const int> retrained_pred,
                             const MinimalDcaOptions& options) {
  const auto& gates = spec.gates();
  if (options.require_unique_rmin && options.reasoning.size() != originals.size()) {
    throw InputError("require_unique_rmin needs reasoning sets for every sample");
  }
  // Per gate: key -> which implied gate outputs were observed.
  std::vector<std::map<std::vector<ValueIndex>, std::pair<bool, bool>>> keyed(gates.size());
  for (std::size_t i = 0; i < originals.size(); ++i) {
    if (options.require_unique_rmin && options.reasoning[i].r_min.size() != 1) continue;
    const auto values = gate_values(spec, domain, originals[i].inputs);
    for (std::size_t g = 0; g < gates.size(); ++g) {
      if (!is_pivotal(spec, values, g)) continue;
      // On a pivotal gate the top-level output equals it or its negation.
      std::vector<bool> with_true = values;
      with_true[g] = true;
      const bool pred = retrained_pred[i] != 0;
      const bool implied = top_output(spec.top_level(), with_true) == pred;
      std::vector<ValueIndex> key(masked[i].entries.begin() + static_cast<std::ptrdiff_t>(gates[g].begin),
                                  masked[i].entries.begin() + static_cast<std::ptrdiff_t>(gates[g].end));
      auto& seen = keyed[g][std::move(key)];
      (implied ? seen.second : seen.first) = true;
    }
  }
  MinimalDcaResult out;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t g = 0; g < gates.size(); ++g) {
    std::size_t conflicts = 0;
    for (const auto& [key, seen] : keyed[g]) conflicts += seen.first && seen.second ? 1 : 0;
    out.keys.push_back(keyed[g].size());
    out.conflicting_keys.push_back(conflicts);
    if (keyed[g].empty()) {
      out.per_gate.push_back(std::nullopt);
      continue;
    }
    const double pct = 100.0 * static_cast<double>(conflicts) / static_cast<double>(keyed[g].size());
    out.per_gate.push_back(pct);
    sum += pct;
    ++defined;
  }
  if (defined > 0) out.aggregate = sum / static_cast<double>(defined);
  return out;
}

}  // namespace andor
