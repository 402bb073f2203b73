#pragma once

// Per-input attribution methods for NetModel. The reference point for every
// method that needs one (integrated gradients path origin, DeepLift
// reference, occlusion and SHAP ablation) is the mask token 0.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "andor/net.hpp"

namespace andor {

enum class MethodKind {
  Gradient,
  GradientXInput,
  IntegratedGradients,
  DeepLift,
  LrpEpsilon,
  Occlusion,
  FeaturePermutation,
  KernelShap,
};

enum class ScoreTransform { Identity, Abs };
enum class TargetMode { Predicted, TrueLabel };

struct MethodSpec {
  MethodKind kind = MethodKind::Gradient;
  std::size_t ig_steps = 64;
  double lrp_epsilon = 1e-6;
  std::size_t permutation_repeats = 5;
  bool shap_exact = true;
  std::size_t shap_samples = 2048;
  ScoreTransform transform = ScoreTransform::Identity;
  TargetMode target = TargetMode::Predicted;
  std::uint64_t seed = 0;

  void validate() const;
  /// Canonical name, e.g. "integrated_gradients".
  std::string name() const;
};

std::string_view method_name(MethodKind kind);
MethodKind parse_method_kind(std::string_view name);
/// Names of the eight implemented methods in canonical order.
std::vector<std::string> implemented_method_names();
/// Table entries for conv/attention methods whose scores can only be
/// ingested from external files.
const std::vector<std::string>& external_method_names();
bool is_external_method(std::string_view name);

/// Scores for one sample. Throws ConfigError for dataset-context methods
/// (feature_permutation) and BudgetError for exact SHAP with l > 20.
std::vector<double> attribute(const NetModel& model, std::span<const double> x, const MethodSpec& spec,
                              std::optional<int> label = std::nullopt);

/// Scores for every row of `inputs` (row-major, `cols` wide). Required for
/// feature_permutation, which permutes columns across the whole set.
std::vector<std::vector<double>> attribute_batch(const NetModel& model, const LabeledData& inputs,
                                                 const MethodSpec& spec);

// Individual methods; `target` is the explained logit.
std::vector<double> gradient_scores(const NetModel& model, std::span<const double> x, std::size_t target);
std::vector<double> integrated_gradients(const NetModel& model, std::span<const double> x, std::size_t target,
                                         std::size_t steps);
std::vector<double> deeplift_rescale(const NetModel& model, std::span<const double> x, std::size_t target);
std::vector<double> lrp_epsilon(const NetModel& model, std::span<const double> x, std::size_t target,
                                double epsilon);
std::vector<double> occlusion(const NetModel& model, std::span<const double> x, std::size_t target);
std::vector<double> kernel_shap_exact(const NetModel& model, std::span<const double> x, std::size_t target);
std::vector<double> kernel_shap_sampled(const NetModel& model, std::span<const double> x, std::size_t target,
                                        std::size_t samples, std::uint64_t seed);
std::vector<std::vector<double>> feature_permutation(const NetModel& model, const LabeledData& inputs,
                                                     std::span<const std::size_t> targets, std::size_t repeats,
                                                     std::uint64_t seed);

/// Shapley values of v(S) = target logit with inputs outside S set to 0, by
/// direct enumeration over subsets. l <= 12.
std::vector<double> exact_shapley_reference(const NetModel& model, std::span<const double> x, std::size_t target);

}  // namespace andor
