#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "andor/attribution.hpp"
#include "andor/data.hpp"
#include "andor/errors.hpp"
#include "andor/logic.hpp"

using namespace andor;

namespace {

std::vector<double> binary_input(std::size_t l, std::mt19937_64& rng) {
  std::vector<double> x(l);
  for (auto& v : x) v = (rng() & 1U) ? 1.0 : -1.0;
  return x;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Two-layer identity network computing w.x + b on logit 1.
NetModel linear_model(const std::vector<double>& w, double b) {
  const std::size_t l = w.size();
  DenseLayer first{l, l, std::vector<double>(l * l, 0.0), std::vector<double>(l, 0.0)};
  for (std::size_t i = 0; i < l; ++i) first.weights[i * l + i] = 1.0;
  DenseLayer second{l, 2, std::vector<double>(2 * l, 0.0), {0.0, b}};
  for (std::size_t i = 0; i < l; ++i) second.weights[l + i] = w[i];
  return NetModel(NetConfig{{l, l, 2}, Activation::Identity, 0}, {first, second});
}

}  // namespace

TEST_CASE("method names and validation") {
  CHECK(implemented_method_names().size() == 8);
  CHECK(parse_method_kind("deeplift") == MethodKind::DeepLift);
  CHECK(is_external_method("gradcam"));
  CHECK_FALSE(is_external_method("occlusion"));
  CHECK_THROWS_AS(parse_method_kind("gradcam"), ConfigError);
  MethodSpec s;
  s.kind = MethodKind::IntegratedGradients;
  s.ig_steps = 8;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = MethodSpec{};
  s.kind = MethodKind::LrpEpsilon;
  s.lrp_epsilon = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = MethodSpec{};
  s.kind = MethodKind::FeaturePermutation;
  s.permutation_repeats = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("linear model closed forms") {
  const std::vector<double> w{0.5, -2.0, 1.5, 0.25};
  const NetModel m = linear_model(w, 0.7);
  const std::vector<double> x{1, -1, 0.5, -0.25};
  const auto ig = integrated_gradients(m, x, 1, 16);
  const auto ks = kernel_shap_exact(m, x, 1);
  const auto gx = attribute(m, x, MethodSpec{MethodKind::GradientXInput});
  const auto occ = occlusion(m, x, 1);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(ig[i] == doctest::Approx(w[i] * x[i]).epsilon(1e-12));
    CHECK(ks[i] == doctest::Approx(w[i] * x[i]).epsilon(1e-9));
    CHECK(gx[i] == doctest::Approx(w[i] * x[i]).epsilon(1e-12));
    CHECK(occ[i] == doctest::Approx(w[i] * x[i]).epsilon(1e-12));
  }
}

TEST_CASE("attribution axioms on random networks") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const Activation act = trial % 2 ? Activation::Tanh : Activation::Relu;
    const NetModel m(NetConfig::for_inputs(8, {16, 8}, act, rng()));
    const auto x = binary_input(8, rng);
    const std::size_t t = static_cast<std::size_t>(m.predict(x));
    const std::vector<double> zero(8, 0.0);
    const double delta = m.logits(x)[t] - m.logits(zero)[t];

    CHECK(std::abs(sum(integrated_gradients(m, x, t, 256)) - delta) <= 1e-3);
    CHECK(std::abs(sum(deeplift_rescale(m, x, t)) - delta) <= 1e-3);
    const double logit = m.logits(x)[t];
    CHECK(std::abs(sum(lrp_epsilon(m, x, t, 1e-6)) - logit) <= 0.05 * std::abs(logit));

    const auto ks = kernel_shap_exact(m, x, t);
    const auto ref = exact_shapley_reference(m, x, t);
    for (std::size_t i = 0; i < 8; ++i) CHECK(std::abs(ks[i] - ref[i]) <= 1e-6);
    CHECK(std::abs(sum(ref) - delta) <= 1e-9);
  }
}

TEST_CASE("shapley symmetry on duplicated inputs") {
  // Logit depends on x0 + x1 symmetrically.
  DenseLayer first{3, 2, {1, 1, 0, 0, 0, 1}, {0, 0}};
  DenseLayer second{2, 2, {0, 0, 1, -0.5}, {0, 0.1}};
  const NetModel m(NetConfig{{3, 2, 2}, Activation::Tanh, 0}, {first, second});
  const std::vector<double> x{0.7, 0.7, -1};
  const auto ref = exact_shapley_reference(m, x, 1);
  CHECK(ref[0] == doctest::Approx(ref[1]).epsilon(1e-12));
  CHECK(kernel_shap_exact(m, x, 1)[0] == doctest::Approx(ref[1]).epsilon(1e-9));
}

TEST_CASE("sampled kernel shap approaches the exact values") {
  std::mt19937_64 rng(5);
  const NetModel m(NetConfig::for_inputs(8, {12}, Activation::Tanh, 77));
  const auto x = binary_input(8, rng);
  const auto exact = kernel_shap_exact(m, x, 1);
  const auto approx = kernel_shap_sampled(m, x, 1, 20000, 3);
  double err = 0, scale = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    err = std::max(err, std::abs(exact[i] - approx[i]));
    scale = std::max(scale, std::abs(exact[i]));
  }
  CHECK(err <= 0.1 * scale + 1e-6);
  CHECK(approx == kernel_shap_sampled(m, x, 1, 20000, 3));
  // Efficiency holds exactly for the constrained fit.
  CHECK(sum(approx) == doctest::Approx(m.logits(x)[1] - m.logits(std::vector<double>(8, 0.0))[1]).epsilon(1e-9));
}

TEST_CASE("exact shap refuses large inputs") {
  const NetModel m(NetConfig::for_inputs(21, {4}, Activation::Relu, 1));
  CHECK_THROWS_AS(kernel_shap_exact(m, std::vector<double>(21, 1.0), 0), BudgetError);
  const NetModel r(NetConfig::for_inputs(13, {4}, Activation::Relu, 1));
  CHECK_THROWS_AS(exact_shapley_reference(r, std::vector<double>(13, 1.0), 0), BudgetError);
}

TEST_CASE("feature permutation") {
  const std::vector<double> w{1.0, -1.0, 0.0};
  const NetModel m = linear_model(w, 0.0);
  LabeledData d;
  d.cols = 3;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 40; ++i) d.push(std::vector<double>{(rng() & 1U) ? 1.0 : -1.0, (rng() & 1U) ? 1.0 : -1.0, 0.5}, 0);
  std::vector<std::size_t> targets(d.rows(), 1);
  const auto s = feature_permutation(m, d, targets, 5, 9);
  REQUIRE(s.size() == d.rows());
  for (const auto& row : s) CHECK(row[2] == 0.0);  // constant column, zero weight
  CHECK(s == feature_permutation(m, d, targets, 5, 9));
  MethodSpec spec{MethodKind::FeaturePermutation};
  CHECK_THROWS_AS(attribute(m, d.row(0), spec), ConfigError);
  CHECK(attribute_batch(m, d, spec).size() == d.rows());
}

TEST_CASE("score transform and target selection") {
  std::mt19937_64 rng(8);
  const NetModel m(NetConfig::for_inputs(8, {8}, Activation::Tanh, 4));
  const auto x = binary_input(8, rng);
  MethodSpec s{MethodKind::Gradient};
  const auto raw = attribute(m, x, s);
  s.transform = ScoreTransform::Abs;
  const auto mag = attribute(m, x, s);
  for (std::size_t i = 0; i < 8; ++i) CHECK(mag[i] == std::abs(raw[i]));

  MethodSpec truth{MethodKind::Gradient};
  truth.target = TargetMode::TrueLabel;
  const int other = 1 - m.predict(x);
  CHECK(attribute(m, x, truth, other) == gradient_scores(m, x, static_cast<std::size_t>(other)));
  CHECK_THROWS_AS(attribute(m, x, truth), InputError);
}
