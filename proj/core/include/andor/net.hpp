#pragma once

// Small fully connected classifier trained from scratch with softmax
// cross-entropy. Everything is double precision and deterministic given
// the seeds in NetConfig and TrainConfig.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "andor/data.hpp"

namespace andor {

enum class Activation { Relu, Tanh, Identity };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

struct NetConfig {
  std::vector<std::size_t> widths;  // input, hidden..., 2
  Activation activation = Activation::Relu;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless widths = [l, h1, ..., 2] with a hidden layer.
  void validate() const;
  static NetConfig for_inputs(std::size_t inputs, std::vector<std::size_t> hidden, Activation act, std::uint64_t seed);
};

enum class OptimizerKind { Sgd, Adam };

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 2000;
  bool early_stop = true;  // stop once train and validation accuracy are both 1
  bool oversample = true;
  std::size_t folds = 5;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Weights are stored row-major as out x in.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double w(std::size_t o, std::size_t i) const { return weights[o * in + i]; }
};

/// Pre- and post-activation values of every layer for one input. post[0] is
/// the input itself; the final layer is linear so pre.back() == post.back().
struct ForwardTrace {
  std::vector<std::vector<double>> pre;
  std::vector<std::vector<double>> post;
};

class NetModel {
 public:
  /// Fan-in scaled normal initialization from config.seed.
  explicit NetModel(NetConfig config);
  NetModel(NetConfig config, std::vector<DenseLayer> layers);

  const NetConfig& config() const { return config_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  std::size_t input_len() const { return config_.widths.front(); }

  std::vector<double> logits(std::span<const double> x) const;
  /// argmax of the logits; ties go to class 0.
  int predict(std::span<const double> x) const;
  ForwardTrace forward_trace(std::span<const double> x) const;

  /// d logit[target] / d x by reverse mode.
  std::vector<double> input_gradient(std::span<const double> x, std::size_t target) const;

  double activate(double z) const;
  double activate_derivative(double z) const;

  bool all_finite() const;
  double accuracy(const LabeledData& data) const;

 private:
  void check_input(std::span<const double> x) const;

  NetConfig config_;
  std::vector<DenseLayer> layers_;
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
};

struct FitResult {
  std::vector<EpochLog> log;
  std::size_t epochs = 0;
};

/// Minibatch training of `model` in place. `validation` may be empty.
/// Throws TrainingError on a non-finite loss.
FitResult fit(NetModel& model, const TrainConfig& config, const LabeledData& train, const LabeledData& validation);

struct FoldModel {
  std::size_t fold = 0;
  NetModel model;
  std::vector<std::size_t> train_indices;       // before oversampling
  std::vector<std::size_t> validation_indices;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
  FitResult fit;
};

/// One model per cross-validation fold over the training side of `split`.
/// Fold k trains on every other fold (oversampled if configured) and
/// validates on fold k; test accuracy is measured on split.test.
std::vector<FoldModel> train_net(const NetConfig& net, const TrainConfig& train, const Dataset& dataset,
                                 const SplitIndices& split);

/// The stratified validation folds train_net uses for `split`.
std::vector<std::vector<std::size_t>> cv_folds(const TrainConfig& train, const Dataset& dataset,
                                               const SplitIndices& split);

/// Trains fold `k` of `folds` alone (train_net runs this for every fold).
FoldModel train_fold(const NetConfig& net, const TrainConfig& train, const Dataset& dataset,
                     const SplitIndices& split, const std::vector<std::vector<std::size_t>>& folds, std::size_t k);

std::string model_to_json(const NetModel& model);
NetModel model_from_json(std::string_view text);
std::string training_log_csv(const FitResult& fit);

}  // namespace andor
