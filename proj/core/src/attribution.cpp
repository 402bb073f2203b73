#include "andor/attribution.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "andor/errors.hpp"

namespace andor {

namespace {

constexpr MethodKind kAllMethods[] = {
    MethodKind::Gradient,   MethodKind::GradientXInput, MethodKind::IntegratedGradients, MethodKind::DeepLift,
    MethodKind::LrpEpsilon, MethodKind::Occlusion,      MethodKind::FeaturePermutation,  MethodKind::KernelShap,
};

constexpr std::size_t kMaxExactShapInputs = 20;

double target_logit(const NetModel& model, std::span<const double> x, std::size_t target) {
  return model.logits(x)[target];
}

}  // namespace

std::string_view method_name(MethodKind kind) {
  switch (kind) {
    case MethodKind::Gradient: return "gradient";
    case MethodKind::GradientXInput: return "gradient_x_input";
    case MethodKind::IntegratedGradients: return "integrated_gradients";
    case MethodKind::DeepLift: return "deeplift";
    case MethodKind::LrpEpsilon: return "lrp_epsilon";
    case MethodKind::Occlusion: return "occlusion";
    case MethodKind::FeaturePermutation: return "feature_permutation";
    case MethodKind::KernelShap: return "kernel_shap";
  }
  return "?";
}

MethodKind parse_method_kind(std::string_view name) {
  for (MethodKind k : kAllMethods) {
    if (method_name(k) == name) return k;
  }
  throw ConfigError("unknown attribution method '" + std::string(name) + "'");
}

std::vector<std::string> implemented_method_names() {
  std::vector<std::string> out;
  for (MethodKind k : kAllMethods) out.emplace_back(method_name(k));
  return out;
}

const std::vector<std::string>& external_method_names() {
  static const std::vector<std::string> names = {
      "gradcam", "gradcam_pp", "guided_gradcam", "deconvolution", "lrp_rollout", "lrp_transformer",
      "lrp_transformer_cls",
  };
  return names;
}

bool is_external_method(std::string_view name) {
  const auto& names = external_method_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

void MethodSpec::validate() const {
  if (kind == MethodKind::IntegratedGradients && ig_steps < 16) throw ConfigError("integrated gradients needs >= 16 steps");
  if (kind == MethodKind::LrpEpsilon && !(lrp_epsilon > 0.0)) throw ConfigError("LRP epsilon must be positive");
  if (kind == MethodKind::FeaturePermutation && permutation_repeats < 1) throw ConfigError("permutation repeats must be >= 1");
  if (kind == MethodKind::KernelShap && !shap_exact && shap_samples < 1) throw ConfigError("sampled SHAP needs samples");
}

std::string MethodSpec::name() const { return std::string(method_name(kind)); }

// ---- gradient family -----------------------------------------------------

std::vector<double> gradient_scores(const NetModel& model, std::span<const double> x, std::size_t target) {
  return model.input_gradient(x, target);
}

std::vector<double> integrated_gradients(const NetModel& model, std::span<const double> x, std::size_t target,
                                         std::size_t steps) {
  std::vector<double> total(x.size(), 0.0), point(x.size());
  for (std::size_t k = 0; k < steps; ++k) {
    const double alpha = (static_cast<double>(k) + 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < x.size(); ++i) point[i] = alpha * x[i];
    const auto g = model.input_gradient(point, target);
    for (std::size_t i = 0; i < x.size(); ++i) total[i] += g[i];
  }
  for (std::size_t i = 0; i < x.size(); ++i) total[i] *= x[i] / static_cast<double>(steps);
  return total;
}

std::vector<double> deeplift_rescale(const NetModel& model, std::span<const double> x, std::size_t target) {
  const std::vector<double> zero(x.size(), 0.0);
  const ForwardTrace act = model.forward_trace(x);
  const ForwardTrace ref = model.forward_trace(zero);
  const auto& layers = model.layers();

  std::vector<double> mult(layers.back().out, 0.0);
  mult[target] = 1.0;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const DenseLayer& L = layers[k];
    if (k + 1 < layers.size()) {
      const auto& z = act.pre[k + 1];
      const auto& z0 = ref.pre[k + 1];
      const auto& a = act.post[k + 1];
      const auto& a0 = ref.post[k + 1];
      for (std::size_t o = 0; o < L.out; ++o) {
        const double dz = z[o] - z0[o];
        const double slope = std::abs(dz) < 1e-9 ? model.activate_derivative(z[o]) : (a[o] - a0[o]) / dz;
        mult[o] *= slope;
      }
    }
    std::vector<double> below(L.in, 0.0);
    for (std::size_t o = 0; o < L.out; ++o) {
      if (mult[o] == 0.0) continue;
      for (std::size_t i = 0; i < L.in; ++i) below[i] += L.w(o, i) * mult[o];
    }
    mult = std::move(below);
  }
  for (std::size_t i = 0; i < x.size(); ++i) mult[i] *= x[i];
  return mult;
}

// Epsilon rule with each bias split evenly over the layer inputs, so the
// rule conserves relevance up to the epsilon stabilizer.
std::vector<double> lrp_epsilon(const NetModel& model, std::span<const double> x, std::size_t target,
                                double epsilon) {
  const ForwardTrace t = model.forward_trace(x);
  const auto& layers = model.layers();
  std::vector<double> rel(layers.back().out, 0.0);
  rel[target] = t.post.back()[target];
  for (std::size_t k = layers.size(); k-- > 0;) {
    const DenseLayer& L = layers[k];
    const auto& a = t.post[k];
    const auto& z = t.pre[k + 1];
    std::vector<double> below(L.in, 0.0);
    const double share = 1.0 / static_cast<double>(L.in);
    for (std::size_t o = 0; o < L.out; ++o) {
      if (rel[o] == 0.0) continue;
      const double denom = z[o] + (z[o] >= 0.0 ? epsilon : -epsilon);
      const double ratio = rel[o] / denom;
      for (std::size_t i = 0; i < L.in; ++i) below[i] += (a[i] * L.w(o, i) + L.bias[o] * share) * ratio;
    }
    rel = std::move(below);
  }
  return rel;
}

std::vector<double> occlusion(const NetModel& model, std::span<const double> x, std::size_t target) {
  const double full = target_logit(model, x, target);
  std::vector<double> point(x.begin(), x.end()), out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    point[i] = 0.0;
    out[i] = full - target_logit(model, point, target);
    point[i] = x[i];
  }
  return out;
}

// ---- Shapley family ------------------------------------------------------

namespace {

std::vector<double> coalition_values(const NetModel& model, std::span<const double> x, std::size_t target) {
  const std::size_t l = x.size();
  std::vector<double> v(std::size_t{1} << l), point(l);
  for (std::size_t s = 0; s < v.size(); ++s) {
    for (std::size_t i = 0; i < l; ++i) point[i] = (s >> i) & 1U ? x[i] : 0.0;
    v[s] = target_logit(model, point, target);
  }
  return v;
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Solves A x = b in place (Gaussian elimination, partial pivoting).
std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    }
    if (std::abs(a[piv * n + c]) < 1e-300) throw InputError("singular SHAP regression system");
    if (piv != c) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / a[c * n + c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = s / a[r * n + r];
  }
  return x;
}

// Weighted least squares over coalitions under the efficiency constraint
// sum(phi) = v(full) - v(empty), with the last player eliminated.
class ConstrainedRegression {
 public:
  ConstrainedRegression(std::size_t players, double v_empty, double v_full)
      : l_(players), v_empty_(v_empty), delta_(v_full - v_empty), ata_((players - 1) * (players - 1), 0.0),
        aty_(players - 1, 0.0) {}

  void add(std::uint64_t coalition, double value, double weight) {
    const std::size_t m = l_ - 1;
    const bool last = (coalition >> m) & 1U;
    const double y = value - v_empty_ - (last ? delta_ : 0.0);
    row_.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) row_[i] = (((coalition >> i) & 1U) ? 1.0 : 0.0) - (last ? 1.0 : 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      if (row_[i] == 0.0) continue;
      aty_[i] += weight * row_[i] * y;
      for (std::size_t j = 0; j < m; ++j) ata_[i * m + j] += weight * row_[i] * row_[j];
    }
  }

  std::vector<double> solve() const {
    if (l_ == 1) return {delta_};
    auto phi = solve_dense(ata_, aty_);
    double rest = delta_;
    for (double p : phi) rest -= p;
    phi.push_back(rest);
    return phi;
  }

 private:
  std::size_t l_;
  double v_empty_;
  double delta_;
  std::vector<double> ata_;
  std::vector<double> aty_;
  std::vector<double> row_;
};

std::vector<double> ablated(std::span<const double> x, std::uint64_t coalition) {
  std::vector<double> point(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) point[i] = (coalition >> i) & 1U ? x[i] : 0.0;
  return point;
}

}  // namespace

std::vector<double> kernel_shap_exact(const NetModel& model, std::span<const double> x, std::size_t target) {
  const std::size_t l = x.size();
  if (l > kMaxExactShapInputs) throw BudgetError("exact KernelSHAP refused for l > 20");
  const std::uint64_t full = (std::uint64_t{1} << l) - 1;
  const double v_empty = target_logit(model, ablated(x, 0), target);
  const double v_full = target_logit(model, x, target);
  ConstrainedRegression reg(l, v_empty, v_full);
  for (std::uint64_t s = 1; s < full; ++s) {
    const auto k = static_cast<std::size_t>(std::popcount(s));
    const double weight = static_cast<double>(l - 1) /
                          (binomial(l, k) * static_cast<double>(k) * static_cast<double>(l - k));
    reg.add(s, target_logit(model, ablated(x, s), target), weight);
  }
  return reg.solve();
}

std::vector<double> kernel_shap_sampled(const NetModel& model, std::span<const double> x, std::size_t target,
                                        std::size_t samples, std::uint64_t seed) {
  const std::size_t l = x.size();
  if (l > 63) throw BudgetError("KernelSHAP supports at most 63 inputs");
  const double v_empty = target_logit(model, ablated(x, 0), target);
  const double v_full = target_logit(model, x, target);
  if (l == 1) return {v_full - v_empty};
  ConstrainedRegression reg(l, v_empty, v_full);

  // Coalition size k is drawn with probability proportional to the total
  // kernel mass of that size, (l-1)/(k(l-k)); members are then uniform.
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t k = 1; k < l; ++k) {
    total += static_cast<double>(l - 1) / (static_cast<double>(k) * static_cast<double>(l - k));
    cumulative.push_back(total);
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> players(l);
  for (std::size_t n = 0; n < samples; ++n) {
    const double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0) * total;
    const std::size_t k = 1 + static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    for (std::size_t i = 0; i < l; ++i) players[i] = i;
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < std::min(k, l - 1); ++i) {
      std::swap(players[i], players[i + rng() % (l - i)]);
      s |= std::uint64_t{1} << players[i];
    }
    reg.add(s, target_logit(model, ablated(x, s), target), 1.0);
  }
  return reg.solve();
}

std::vector<double> exact_shapley_reference(const NetModel& model, std::span<const double> x, std::size_t target) {
  const std::size_t l = x.size();
  if (l > 12) throw BudgetError("exact Shapley reference refused for l > 12");
  const auto v = coalition_values(model, x, target);
  std::vector<double> weight(l);
  for (std::size_t s = 0; s < l; ++s) {
    // s! (l-s-1)! / l!
    weight[s] = 1.0 / (static_cast<double>(l) * binomial(l - 1, s));
  }
  std::vector<double> phi(l, 0.0);
  for (std::size_t j = 0; j < l; ++j) {
    const std::size_t bit = std::size_t{1} << j;
    for (std::size_t s = 0; s < v.size(); ++s) {
      if (s & bit) continue;
      phi[j] += weight[static_cast<std::size_t>(std::popcount(s))] * (v[s | bit] - v[s]);
    }
  }
  return phi;
}

// ---- dataset-context methods ---------------------------------------------

std::vector<std::vector<double>> feature_permutation(const NetModel& model, const LabeledData& inputs,
                                                     std::span<const std::size_t> targets, std::size_t repeats,
                                                     std::uint64_t seed) {
  const std::size_t n = inputs.rows(), l = inputs.cols;
  std::vector<std::vector<double>> scores(n, std::vector<double>(l, 0.0));
  std::vector<double> base(n);
  for (std::size_t r = 0; r < n; ++r) base[r] = target_logit(model, inputs.row(r), targets[r]);
  std::vector<std::size_t> perm(n);
  std::vector<double> point(l);
  for (std::size_t j = 0; j < l; ++j) {
    for (std::size_t rep = 0; rep < repeats; ++rep) {
      std::mt19937_64 rng(mix_seed(seed, j * repeats + rep));
      for (std::size_t i = 0; i < n; ++i) perm[i] = i;
      for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng() % i]);
      for (std::size_t r = 0; r < n; ++r) {
        const auto row = inputs.row(r);
        std::copy(row.begin(), row.end(), point.begin());
        point[j] = inputs.row(perm[r])[j];
        scores[r][j] += base[r] - target_logit(model, point, targets[r]);
      }
    }
    for (std::size_t r = 0; r < n; ++r) scores[r][j] /= static_cast<double>(repeats);
  }
  return scores;
}

// ---- dispatch ------------------------------------------------------------

namespace {

std::size_t resolve_target(const NetModel& model, std::span<const double> x, const MethodSpec& spec,
                           std::optional<int> label) {
  if (spec.target == TargetMode::TrueLabel) {
    if (!label) throw InputError("true-label target requested without a label");
    return static_cast<std::size_t>(*label);
  }
  return static_cast<std::size_t>(model.predict(x));
}

void transform(std::vector<double>& scores, ScoreTransform t) {
  if (t == ScoreTransform::Abs) {
    for (double& s : scores) s = std::abs(s);
  }
}

}  // namespace

std::vector<double> attribute(const NetModel& model, std::span<const double> x, const MethodSpec& spec,
                              std::optional<int> label) {
  spec.validate();
  const std::size_t target = resolve_target(model, x, spec, label);
  std::vector<double> scores;
  switch (spec.kind) {
    case MethodKind::Gradient: scores = gradient_scores(model, x, target); break;
    case MethodKind::GradientXInput:
      scores = gradient_scores(model, x, target);
      for (std::size_t i = 0; i < x.size(); ++i) scores[i] *= x[i];
      break;
    case MethodKind::IntegratedGradients: scores = integrated_gradients(model, x, target, spec.ig_steps); break;
    case MethodKind::DeepLift: scores = deeplift_rescale(model, x, target); break;
    case MethodKind::LrpEpsilon: scores = lrp_epsilon(model, x, target, spec.lrp_epsilon); break;
    case MethodKind::Occlusion: scores = occlusion(model, x, target); break;
    case MethodKind::KernelShap:
      scores = spec.shap_exact ? kernel_shap_exact(model, x, target)
                               : kernel_shap_sampled(model, x, target, spec.shap_samples, spec.seed);
      break;
    case MethodKind::FeaturePermutation:
      throw ConfigError("feature_permutation needs an evaluation set; use attribute_batch");
  }
  transform(scores, spec.transform);
  return scores;
}

std::vector<std::vector<double>> attribute_batch(const NetModel& model, const LabeledData& inputs,
                                                 const MethodSpec& spec) {
  spec.validate();
  std::vector<std::vector<double>> out;
  out.reserve(inputs.rows());
  if (spec.kind == MethodKind::FeaturePermutation) {
    std::vector<std::size_t> targets(inputs.rows());
    for (std::size_t r = 0; r < inputs.rows(); ++r) {
      targets[r] = resolve_target(model, inputs.row(r), spec, inputs.y[r]);
    }
    out = feature_permutation(model, inputs, targets, spec.permutation_repeats, spec.seed);
    for (auto& s : out) transform(s, spec.transform);
    return out;
  }
  for (std::size_t r = 0; r < inputs.rows(); ++r) {
    MethodSpec per_row = spec;
    per_row.seed = mix_seed(spec.seed, r);
    out.push_back(attribute(model, inputs.row(r), per_row, inputs.y[r]));
  }
  return out;
}

}  // namespace andor
