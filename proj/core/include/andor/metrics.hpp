#pragma once

// Faithfulness metrics comparing attribution scores and masked data against
// the ground-truth reasoning sets.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "andor/logic.hpp"
#include "andor/reasoning.hpp"

namespace andor {

/// Percentage over all samples and split by true class; a class with no
/// samples yields nullopt.
struct ClassRate {
  std::optional<double> all;
  std::optional<double> class0;
  std::optional<double> class1;
};

ClassRate rate_by_class(const std::vector<bool>& flags, std::span<const int> labels);

enum class NibVariant {
  Strict,    // some member of some minimal set scores <= max baseline score
  Coverage,  // every minimal set has a member scoring <= max baseline score
};

/// Highest score over the baseline block. Throws ConfigError if NrB = 0.
double max_baseline_score(std::span<const double> scores, const FormulaSpec& spec);

bool nib_violation(std::span<const double> scores, const ReasoningSets& sets, const FormulaSpec& spec,
                   NibVariant variant);
bool gib_violation(std::span<const double> scores, const ReasoningSets& sets, const FormulaSpec& spec);

/// Determined three-valued evaluation that equals the label.
bool logical_correct(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked, int label);
/// Majority class under uniform completion (p = 0.5 predicts class 0).
int statistical_prediction(const FormulaSpec& spec, const Domain& domain, const MaskedSample& masked);

double logical_accuracy(const FormulaSpec& spec, const Domain& domain, std::span<const MaskedSample> masked,
                        std::span<const int> labels);
double statistical_logical_accuracy(const FormulaSpec& spec, const Domain& domain,
                                    std::span<const MaskedSample> masked, std::span<const int> labels);

struct DcaResult {
  std::size_t considered = 0;          // samples with base == retrained prediction
  std::size_t conflicting_samples = 0;
  std::size_t groups = 0;
  std::size_t conflicting_groups = 0;
  std::optional<double> sample_weighted;  // %; nullopt when nothing considered
  std::optional<double> group_weighted;
};

/// Groups considered samples by their masked non-baseline entries; a group
/// conflicts when it holds two different retrained predictions.
DcaResult full_dca(const FormulaSpec& spec, std::span<const MaskedSample> masked, std::span<const int> base_pred,
                   std::span<const int> retrained_pred);

struct MinimalDcaOptions {
  bool require_unique_rmin = false;
  /// Needed only with require_unique_rmin; aligned with the samples.
  std::span<const ReasoningSets> reasoning{};
};

struct MinimalDcaResult {
  std::vector<std::optional<double>> per_gate;  // % of conflicting keys
  std::vector<std::size_t> keys;
  std::vector<std::size_t> conflicting_keys;
  std::optional<double> aggregate;  // mean over gates with a defined value
};

/// True iff flipping gate `g` flips the top-level output of the sample.
bool is_pivotal(const FormulaSpec& spec, const std::vector<bool>& gate_values, std::size_t g);

/// For every gate, pivotal samples are keyed by the gate's masked inputs.
/// Each retrained prediction implies an output of the gate (given the
/// sample's other gate outputs); a key conflicts when it implies both.
MinimalDcaResult minimal_dca(const FormulaSpec& spec, const Domain& domain, std::span<const Sample> originals,
                             std::span<const MaskedSample> masked, std::span<const int> retrained_pred,
                             const MinimalDcaOptions& options = {});

}  // namespace andor
