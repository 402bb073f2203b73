#pragma once

// LeRF masking, remove-and-retrain, and the experiment grid runner.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "andor/config.hpp"
#include "andor/data.hpp"
#include "andor/metrics.hpp"
#include "andor/net.hpp"
#include "andor/reasoning.hpp"

namespace andor {

struct MaskPlan {
  std::vector<bool> masked;  // true = input removed
  double threshold = 0.0;
  ThresholdRule rule;

  std::size_t masked_count() const;
  double masked_fraction() const;
};

/// baseline: t = max baseline score, mask score <= t.
/// avg_factor(f): t = f * mean(scores), mask score < t.
MaskPlan compute_mask(std::span<const double> scores, const ThresholdRule& rule, const FormulaSpec& spec);

MaskedSample apply_mask(const Sample& sample, const MaskPlan& plan);
std::vector<double> masked_numeric(const Domain& domain, const MaskedSample& masked);

struct RetrainResult {
  NetModel model;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<int> test_predictions;
  FitResult fit;
};

/// Fresh model of the configured architecture trained on masked rows.
/// `train` is oversampled when the train config asks for it; `validation`
/// drives early stopping and may be empty.
RetrainResult roar_retrain(const NetConfig& net, const TrainConfig& train, const LabeledData& masked_train,
                           const LabeledData& masked_validation, const LabeledData& masked_test);

// ---- experiment grid -----------------------------------------------------

enum class CellStatus { Ok, Filtered, Failed };
std::string_view to_string(CellStatus s);

struct MetricsReport {
  ClassRate nib_strict;
  ClassRate nib_coverage;
  ClassRate gib;
  ClassRate logical_accuracy;
  ClassRate statistical_logical_accuracy;
  ClassRate mask_fraction;
  ClassRate retrained_accuracy;
  double logical_acc_diff = 0.0;              // retrained - logical
  double statistical_logical_acc_diff = 0.0;  // retrained - statistical logical
  DcaResult full_dca;
  MinimalDcaResult minimal_dca;
};

struct CellResult {
  std::string dataset;
  GateKind top_level = GateKind::And;
  SplitMode split = SplitMode::Split;
  std::size_t fold = 0;
  std::string method;
  std::string threshold;
  CellStatus status = CellStatus::Ok;
  std::string error;
  double base_test_accuracy = 0.0;
  std::size_t evaluated_samples = 0;
  MetricsReport metrics;
};

struct BaseModelResult {
  std::string dataset;
  GateKind top_level = GateKind::And;
  std::size_t fold = 0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::size_t epochs = 0;
  std::vector<double> forest_importances;  // empty when the forest is disabled
  std::string error;
};

struct RunResult {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<BaseModelResult> base_models;
  std::vector<CellResult> cells;  // top-level, fold, method, threshold order

  std::size_t count(CellStatus s) const;
};

/// Per-cell progress callback (called from worker threads, serialized).
using ProgressFn = std::function<void(const CellResult&)>;

/// Scores for externally computed methods: (method, top level) -> sample id
/// -> score vector. The same scores are used for every fold.
using ExternalScores = std::map<std::pair<std::string, GateKind>, std::map<std::size_t, std::vector<double>>>;

/// Runs enumerate -> split -> train -> attribute -> mask -> retrain ->
/// metrics for every (top level, fold, method, threshold). Failures are
/// recorded per cell; the grid always completes.
RunResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {},
                         const ExternalScores* external = nullptr);

/// Dataset for one top level honoring sample_limit.
Dataset build_dataset(const ExperimentConfig& config, GateKind top);

// ---- stage helpers (run_experiment is built from these) ------------------

/// Dataset, split, validation folds and ground truth for one top level.
struct TopSetup {
  GateKind top = GateKind::And;
  std::size_t top_index = 0;
  Dataset dataset;
  SplitIndices split;
  std::vector<std::vector<std::size_t>> folds;
  std::vector<ReasoningSets> reasoning;  // per dataset sample
  std::vector<std::size_t> attributed;   // sorted union of train and test ids
};

TopSetup prepare_top(const ExperimentConfig& config, std::size_t top_index);
FoldModel train_base_model(const ExperimentConfig& config, const TopSetup& setup, std::size_t fold);
/// FoldModel around a saved model: indices and accuracies recomputed.
FoldModel restore_base_model(const TopSetup& setup, std::size_t fold, NetModel model);
/// Gini importances of the comparison forest for a base model's fold.
std::vector<double> train_comparison_forest(const ExperimentConfig& config, const TopSetup& setup,
                                            const FoldModel& base);

/// Scores indexed by dataset sample id; samples outside `attributed` stay empty.
std::vector<std::vector<double>> attribute_setup(const ExperimentConfig& config, const TopSetup& setup,
                                                 const NetModel& model, std::size_t fold, std::size_t method_index);
std::vector<std::vector<double>> external_score_table(const TopSetup& setup,
                                                      const std::map<std::size_t, std::vector<double>>& given);

/// Masked samples indexed by dataset id for one threshold.
std::vector<MaskedSample> mask_setup(const ExperimentConfig& config, const TopSetup& setup,
                                     const std::vector<std::vector<double>>& scores, std::size_t threshold_index);
RetrainResult retrain_setup(const ExperimentConfig& config, const TopSetup& setup, const FoldModel& base,
                            const std::vector<MaskedSample>& masked, std::size_t method_index,
                            std::size_t threshold_index);
/// Metrics on the test split.
MetricsReport evaluate_setup(const ExperimentConfig& config, const TopSetup& setup, const NetModel& base_model,
                             const std::vector<std::vector<double>>& scores, const std::vector<MaskedSample>& masked,
                             std::span<const int> retrained_test_predictions);

/// Metrics for one cell given everything already computed.
struct CellInputs {
  const Dataset* dataset = nullptr;
  std::span<const std::size_t> sample_ids;        // evaluated samples
  std::span<const ReasoningSets> reasoning;       // aligned with sample_ids
  std::span<const std::vector<double>> scores;    // aligned with sample_ids
  std::span<const MaskedSample> masked;           // aligned with sample_ids
  std::span<const int> base_predictions;          // aligned; may be empty
  std::span<const int> retrained_predictions;     // aligned; may be empty
  bool require_unique_rmin = false;
};

MetricsReport compute_metrics(const CellInputs& inputs);

}  // namespace andor
