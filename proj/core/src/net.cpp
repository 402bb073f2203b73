#include "andor/net.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numbers>
#include <random>
#include <sstream>

#include "andor/errors.hpp"

namespace andor {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

void NetConfig::validate() const {
  if (widths.size() < 3) throw ConfigError("network needs input, at least one hidden layer and an output layer");
  if (widths.back() != 2) throw ConfigError("network output width must be 2");
  for (std::size_t w : widths) {
    if (w == 0) throw ConfigError("layer widths must be positive");
  }
}

NetConfig NetConfig::for_inputs(std::size_t inputs, std::vector<std::size_t> hidden, Activation act,
                                std::uint64_t seed) {
  NetConfig c;
  c.widths.push_back(inputs);
  c.widths.insert(c.widths.end(), hidden.begin(), hidden.end());
  c.widths.push_back(2);
  c.activation = act;
  c.seed = seed;
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (folds < 2) throw ConfigError("at least two folds are required");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (optimizer == OptimizerKind::Adam && !(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0)) {
    throw ConfigError("invalid Adam parameters");
  }
}

// ---- model ---------------------------------------------------------------

namespace {

// Box-Muller on mt19937_64 output: stable across standard libraries.
double standard_normal(std::mt19937_64& rng) {
  constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
  const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * kScale;
  const double u2 = static_cast<double>(rng() >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

NetModel::NetModel(NetConfig config) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  for (std::size_t k = 0; k + 1 < config_.widths.size(); ++k) {
    DenseLayer layer;
    layer.in = config_.widths[k];
    layer.out = config_.widths[k + 1];
    const double gain = config_.activation == Activation::Relu ? 2.0 : 1.0;
    const double stddev = std::sqrt(gain / static_cast<double>(layer.in));
    layer.weights.resize(layer.in * layer.out);
    for (double& w : layer.weights) w = stddev * standard_normal(rng);
    layer.bias.assign(layer.out, 0.0);
    layers_.push_back(std::move(layer));
  }
}

NetModel::NetModel(NetConfig config, std::vector<DenseLayer> layers)
    : config_(std::move(config)), layers_(std::move(layers)) {
  config_.validate();
  if (layers_.size() + 1 != config_.widths.size()) throw ConfigError("layer count does not match widths");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& L = layers_[k];
    if (L.in != config_.widths[k] || L.out != config_.widths[k + 1] || L.weights.size() != L.in * L.out ||
        L.bias.size() != L.out) {
      throw ConfigError("layer " + std::to_string(k) + " shape does not match widths");
    }
  }
  if (!all_finite()) throw ConfigError("model parameters must be finite");
}

double NetModel::activate(double z) const {
  switch (config_.activation) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Identity: return z;
  }
  return z;
}

double NetModel::activate_derivative(double z) const {
  switch (config_.activation) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

void NetModel::check_input(std::span<const double> x) const {
  if (x.size() != input_len()) {
    throw InputError("model expects " + std::to_string(input_len()) + " inputs, got " + std::to_string(x.size()));
  }
}

ForwardTrace NetModel::forward_trace(std::span<const double> x) const {
  check_input(x);
  ForwardTrace t;
  t.post.emplace_back(x.begin(), x.end());
  t.pre.emplace_back(x.begin(), x.end());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& L = layers_[k];
    const auto& a = t.post.back();
    std::vector<double> z(L.bias);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double* row = L.weights.data() + o * L.in;
      double s = 0.0;
      for (std::size_t i = 0; i < L.in; ++i) s += row[i] * a[i];
      z[o] += s;
    }
    std::vector<double> out = z;
    if (k + 1 < layers_.size()) {
      for (double& v : out) v = activate(v);
    }
    t.pre.push_back(std::move(z));
    t.post.push_back(std::move(out));
  }
  return t;
}

std::vector<double> NetModel::logits(std::span<const double> x) const {
  check_input(x);
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const DenseLayer& L = layers_[k];
    std::vector<double> z(L.bias);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double* row = L.weights.data() + o * L.in;
      double s = 0.0;
      for (std::size_t i = 0; i < L.in; ++i) s += row[i] * a[i];
      z[o] += s;
      if (k + 1 < layers_.size()) z[o] = activate(z[o]);
    }
    a = std::move(z);
  }
  return a;
}

int NetModel::predict(std::span<const double> x) const {
  const auto z = logits(x);
  return z[1] > z[0] ? 1 : 0;
}

std::vector<double> NetModel::input_gradient(std::span<const double> x, std::size_t target) const {
  const ForwardTrace t = forward_trace(x);
  if (target >= layers_.back().out) throw InputError("target class out of range");
  std::vector<double> grad(layers_.back().out, 0.0);
  grad[target] = 1.0;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const DenseLayer& L = layers_[k];
    if (k + 1 < layers_.size()) {
      const auto& z = t.pre[k + 1];
      for (std::size_t o = 0; o < L.out; ++o) grad[o] *= activate_derivative(z[o]);
    }
    std::vector<double> below(L.in, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double g = grad[o];
      if (g == 0.0) continue;
      const double* row = L.weights.data() + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) below[i] += row[i] * g;
    }
    grad = std::move(below);
  }
  return grad;
}

bool NetModel::all_finite() const {
  for (const auto& L : layers_) {
    for (double w : L.weights) {
      if (!std::isfinite(w)) return false;
    }
    for (double b : L.bias) {
      if (!std::isfinite(b)) return false;
    }
  }
  return true;
}

double NetModel::accuracy(const LabeledData& data) const {
  if (data.rows() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.rows(); ++i) correct += predict(data.row(i)) == data.y[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.rows());
}

// ---- training ------------------------------------------------------------

namespace {

struct Gradients {
  std::vector<std::vector<double>> w;
  std::vector<std::vector<double>> b;

  explicit Gradients(const std::vector<DenseLayer>& layers) {
    for (const auto& L : layers) {
      w.emplace_back(L.weights.size(), 0.0);
      b.emplace_back(L.bias.size(), 0.0);
    }
  }
  void zero() {
    for (auto& v : w) std::fill(v.begin(), v.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
  }
};

// Accumulates d(cross-entropy)/d(params) for one row; returns the loss.
double accumulate(const NetModel& model, std::span<const double> x, int label, Gradients& g) {
  const auto& layers = model.layers();
  const ForwardTrace t = model.forward_trace(x);
  const auto& z = t.post.back();
  const double zmax = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - zmax), e1 = std::exp(z[1] - zmax);
  const double sum = e0 + e1;
  const double p[2] = {e0 / sum, e1 / sum};
  const double loss = -std::log(std::max(p[label], 1e-300));

  std::vector<double> delta = {p[0] - (label == 0 ? 1.0 : 0.0), p[1] - (label == 1 ? 1.0 : 0.0)};
  for (std::size_t k = layers.size(); k-- > 0;) {
    const DenseLayer& L = layers[k];
    if (k + 1 < layers.size()) {
      const auto& pre = t.pre[k + 1];
      for (std::size_t o = 0; o < L.out; ++o) delta[o] *= model.activate_derivative(pre[o]);
    }
    const auto& a = t.post[k];
    std::vector<double> below(L.in, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      const double d = delta[o];
      g.b[k][o] += d;
      if (d == 0.0) continue;
      double* gw = g.w[k].data() + o * L.in;
      const double* row = L.weights.data() + o * L.in;
      for (std::size_t i = 0; i < L.in; ++i) {
        gw[i] += d * a[i];
        below[i] += row[i] * d;
      }
    }
    delta = std::move(below);
  }
  return loss;
}

class Optimizer {
 public:
  Optimizer(const TrainConfig& cfg, const std::vector<DenseLayer>& layers) : cfg_(cfg), m_(layers), v_(layers) {}

  void step(std::vector<DenseLayer>& layers, const Gradients& g, double scale) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < layers.size(); ++k) {
      update(layers[k].weights, g.w[k], m_.w[k], v_.w[k], scale, bc1, bc2);
      update(layers[k].bias, g.b[k], m_.b[k], v_.b[k], scale, bc1, bc2);
    }
  }

 private:
  void update(std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m, std::vector<double>& v,
              double scale, double bc1, double bc2) const {
    const double lr = cfg_.learning_rate;
    if (cfg_.optimizer == OptimizerKind::Sgd) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i] * scale;
      return;
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * scale;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.epsilon);
    }
  }

  const TrainConfig& cfg_;
  Gradients m_;
  Gradients v_;
  std::size_t t_ = 0;
};

}  // namespace

FitResult fit(NetModel& model, const TrainConfig& config, const LabeledData& train, const LabeledData& validation) {
  config.validate();
  if (train.rows() == 0) throw InputError("empty training set");
  FitResult result;
  Gradients grads(model.layers());
  Optimizer opt(config, model.layers());
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
    double total_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      grads.zero();
      for (std::size_t j = start; j < stop; ++j) {
        total_loss += accumulate(model, train.row(order[j]), train.y[order[j]], grads);
      }
      opt.step(model.mutable_layers(), grads, 1.0 / static_cast<double>(stop - start));
    }
    const double mean_loss = total_loss / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss) || !model.all_finite()) {
      std::ostringstream msg;
      msg << "non-finite loss at epoch " << epoch << " (loss=" << mean_loss << ", lr=" << config.learning_rate << ")";
      throw TrainingError(msg.str());
    }
    EpochLog entry{epoch, mean_loss, model.accuracy(train),
                   validation.rows() > 0 ? model.accuracy(validation) : 1.0};
    result.log.push_back(entry);
    result.epochs = epoch;
    if (config.early_stop && entry.train_accuracy == 1.0 && entry.validation_accuracy == 1.0) break;
  }
  return result;
}

std::vector<std::vector<std::size_t>> cv_folds(const TrainConfig& train, const Dataset& dataset,
                                               const SplitIndices& split) {
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& s : dataset.samples) labels.push_back(s.label);
  return stratified_folds(split.train, labels, train.folds, mix_seed(train.seed, 1));
}

FoldModel train_fold(const NetConfig& net, const TrainConfig& train, const Dataset& dataset,
                     const SplitIndices& split, const std::vector<std::vector<std::size_t>>& folds, std::size_t k) {
  train.validate();
  std::vector<int> labels;
  labels.reserve(dataset.size());
  for (const auto& s : dataset.samples) labels.push_back(s.label);

  std::vector<std::size_t> fold_train;
  for (std::size_t j = 0; j < folds.size(); ++j) {
    if (j != k) fold_train.insert(fold_train.end(), folds[j].begin(), folds[j].end());
  }
  std::sort(fold_train.begin(), fold_train.end());
  const auto rows = train.oversample ? oversample_indices(fold_train, labels, mix_seed(train.seed, 100 + k))
                                     : fold_train;
  const LabeledData fit_data = to_labeled(dataset, rows);
  const LabeledData val = to_labeled(dataset, folds[k]);

  NetConfig cfg = net;
  cfg.seed = mix_seed(net.seed, 200 + k);
  TrainConfig tc = train;
  tc.seed = mix_seed(train.seed, 300 + k);
  FoldModel fm{k, NetModel(cfg), fold_train, folds[k], 0.0, 0.0, 0.0, {}};
  fm.fit = fit(fm.model, tc, fit_data, val);
  fm.train_accuracy = fm.model.accuracy(to_labeled(dataset, fold_train));
  fm.validation_accuracy = fm.model.accuracy(val);
  fm.test_accuracy = fm.model.accuracy(to_labeled(dataset, split.test));
  return fm;
}

std::vector<FoldModel> train_net(const NetConfig& net, const TrainConfig& train, const Dataset& dataset,
                                 const SplitIndices& split) {
  const auto folds = cv_folds(train, dataset, split);
  std::vector<FoldModel> out;
  for (std::size_t k = 0; k < folds.size(); ++k) out.push_back(train_fold(net, train, dataset, split, folds, k));
  return out;
}

// ---- serialization -------------------------------------------------------

std::string model_to_json(const NetModel& model) {
  nlohmann::ordered_json j;
  j["widths"] = model.config().widths;
  j["activation"] = std::string(to_string(model.config().activation));
  j["seed"] = model.config().seed;
  auto layers = nlohmann::json::array();
  for (const auto& L : model.layers()) {
    nlohmann::ordered_json lj;
    lj["in"] = L.in;
    lj["out"] = L.out;
    lj["weights"] = L.weights;
    lj["bias"] = L.bias;
    layers.emplace_back(std::move(lj));
  }
  j["layers"] = std::move(layers);
  return j.dump(1);
}

NetModel model_from_json(std::string_view text) {
  NetConfig cfg;
  std::vector<DenseLayer> layers;
  try {
    const auto j = nlohmann::json::parse(text);
    cfg.widths = j.at("widths").get<std::vector<std::size_t>>();
    cfg.activation = parse_activation(j.at("activation").get<std::string>());
    cfg.seed = j.value("seed", std::uint64_t{0});
    for (const auto& lj : j.at("layers")) {
      DenseLayer L;
      L.in = lj.at("in").get<std::size_t>();
      L.out = lj.at("out").get<std::size_t>();
      L.weights = lj.at("weights").get<std::vector<double>>();
      L.bias = lj.at("bias").get<std::vector<double>>();
      layers.push_back(std::move(L));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model file: ") + e.what());
  }
  return NetModel(std::move(cfg), std::move(layers));
}

std::string training_log_csv(const FitResult& fit) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,loss,train_accuracy,validation_accuracy\n";
  for (const auto& e : fit.log) {
    os << e.epoch << ',' << e.loss << ',' << e.train_accuracy << ',' << e.validation_accuracy << '\n';
  }
  return os.str();
}

}  // namespace andor
