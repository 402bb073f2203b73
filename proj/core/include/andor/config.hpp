#pragma once

// Experiment configuration: JSON schema, defaults and content hash.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "andor/attribution.hpp"
#include "andor/data.hpp"
#include "andor/forest.hpp"
#include "andor/logic.hpp"
#include "andor/net.hpp"
#include "andor/reasoning.hpp"

namespace andor {

enum class ThresholdKind { BaselineMax, AvgFactor };

struct ThresholdRule {
  ThresholdKind kind = ThresholdKind::BaselineMax;
  double factor = 1.0;

  /// "baseline", "t1.0", "t0.8", ...
  std::string name() const;
  static ThresholdRule parse(std::string_view name);
  static ThresholdRule baseline_max() { return {ThresholdKind::BaselineMax, 1.0}; }
  static ThresholdRule avg_factor(double f);
};

/// The four default thresholds: baseline, t1.0, t0.8, t0.5.
std::vector<ThresholdRule> default_thresholds();

/// Entry of the method list: an implemented method, or the name of an
/// externally scored method whose scores are ingested from files.
struct MethodEntry {
  std::string name;
  bool external = false;
  MethodSpec spec;
};

struct ExperimentConfig {
  // Dataset. `preset` is empty when blocks/domain are given explicitly.
  std::string dataset_name = "2inBinary";
  std::string preset = "2inBinary";
  BlockSpec and_block{1, 2};
  BlockSpec or_block{1, 2};
  BlockSpec xor_block{1, 2};
  std::size_t baseline_len = 2;
  std::vector<Rational> values{Rational(-1), Rational(1)};
  std::vector<Rational> positives{Rational(1)};
  std::vector<GateKind> top_levels{GateKind::And, GateKind::Or, GateKind::Xor};

  /// 0 = full enumeration; otherwise a seeded uniform subset of this size
  /// (sampled-evaluation mode for large alphabets).
  std::size_t sample_limit = 0;
  std::size_t enumeration_budget = kDefaultEnumerationBudget;
  OracleBudget oracle_budget{};

  SplitMode split_mode = SplitMode::Split;
  double train_ratio = 0.9;

  std::vector<std::size_t> hidden{32};
  Activation activation = Activation::Relu;
  TrainConfig train{};
  std::size_t retrain_max_epochs = 300;
  ForestConfig forest{};
  bool train_forest = true;

  std::vector<MethodEntry> methods;
  std::vector<ThresholdRule> thresholds = default_thresholds();
  ScoreTransform score_transform = ScoreTransform::Identity;
  TargetMode target = TargetMode::Predicted;

  bool only_100acc = false;
  bool require_unique_rmin = false;
  std::uint64_t seed = 42;
  std::size_t jobs = 1;
  std::string out_dir = "out";

  /// Throws ConfigError on any schema or value violation.
  void validate() const;

  FormulaSpec formula(GateKind top) const;
  Domain domain() const;
};

/// Config for one of the built-in presets with all eight methods.
ExperimentConfig preset_config(std::string_view preset);

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a 64 of the canonical JSON (excluding out_dir and jobs), as hex.
std::string config_hash(const ExperimentConfig& config);

/// Default per-method options used by presets.
std::vector<MethodEntry> default_methods();

}  // namespace andor
