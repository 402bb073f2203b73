#include <doctest.h>

#include <random>

#include "andor/errors.hpp"
#include "andor/metrics.hpp"
#include "andor/pipeline.hpp"
#include "andor/reasoning.hpp"

using namespace andor;

namespace {

constexpr ValueIndex N = 0, P = 1;

Sample make(const FormulaSpec& spec, const Domain& d, std::vector<ValueIndex> x) {
  Sample s{std::move(x), 0};
  s.label = eval_sample(spec, d, s.inputs);
  return s;
}

MaskedSample mask_of(const Sample& s, std::initializer_list<std::size_t> masked) {
  MaskedSample m{s.inputs};
  for (std::size_t i : masked) m.entries[i] = kMasked;
  return m;
}

}  // namespace

TEST_CASE("class rates") {
  const std::vector<bool> f{true, false, true, true};
  const std::vector<int> y{0, 0, 1, 1};
  const auto r = rate_by_class(f, y);
  CHECK(*r.all == doctest::Approx(75.0));
  CHECK(*r.class0 == doctest::Approx(50.0));
  CHECK(*r.class1 == doctest::Approx(100.0));
  const std::vector<int> zeros{0, 0, 0, 0};
  CHECK_FALSE(rate_by_class(f, zeros).class1.has_value());
}

TEST_CASE("NIB and GIB") {
  const auto p = make_preset("2inBinary", GateKind::And);
  const auto ds = enumerate_dataset(p.spec, p.domain);
  const auto sets = structural_r_min_all(ds);

  SUBCASE("oracle scores never violate") {
    for (const auto& r : sets) {
      const auto sc = oracle_scores(p.spec, r);
      CHECK_FALSE(nib_violation(sc, r, p.spec, NibVariant::Strict));
      CHECK_FALSE(nib_violation(sc, r, p.spec, NibVariant::Coverage));
      CHECK_FALSE(gib_violation(sc, r, p.spec));
    }
  }
  SUBCASE("ties count as violations") {
    const std::vector<double> flat(8, 0.3);
    for (const auto& r : sets) {
      CHECK(nib_violation(flat, r, p.spec, NibVariant::Strict));
      CHECK(nib_violation(flat, r, p.spec, NibVariant::Coverage));
      CHECK(gib_violation(flat, r, p.spec));
    }
  }
  SUBCASE("redundant singletons split the two readings") {
    // r_min = {{0},{1}}: input 0 below the baseline, input 1 above it.
    const Sample s = make(p.spec, p.domain, {N, N, P, P, P, N, N, P});
    const auto r = structural_r_min(p.spec, p.domain, s);
    const std::vector<double> sc{0.1, 0.9, 0, 0, 0, 0, 0.2, 0.2};
    CHECK(nib_violation(sc, r, p.spec, NibVariant::Strict));
    CHECK_FALSE(nib_violation(sc, r, p.spec, NibVariant::Coverage));
  }
  SUBCASE("coverage implies strict, strict implies GIB") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1, 1);
    for (const auto& r : sets) {
      std::vector<double> sc(8);
      for (auto& v : sc) v = u(rng);
      const bool cov = nib_violation(sc, r, p.spec, NibVariant::Coverage);
      const bool strict = nib_violation(sc, r, p.spec, NibVariant::Strict);
      if (cov) CHECK(strict);
      if (strict) CHECK(gib_violation(sc, r, p.spec));
    }
  }
  SUBCASE("baseline-topping scores always violate GIB") {
    const std::vector<double> sc{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.0, 0.9};
    for (const auto& r : sets) CHECK(gib_violation(sc, r, p.spec));
  }
  SUBCASE("no baseline") {
    const FormulaSpec nb({1, 2}, {1, 2}, {1, 2}, 0, GateKind::And);
    CHECK_THROWS_AS(max_baseline_score(std::vector<double>(6, 0.0), nb), ConfigError);
  }
}

TEST_CASE("logical and statistical accuracy") {
  const auto p = make_preset("2inBinary", GateKind::And);
  const auto ds = enumerate_dataset(p.spec, p.domain);
  std::vector<MaskedSample> none, all;
  std::vector<int> y;
  for (const auto& s : ds.samples) {
    none.push_back(MaskedSample{s.inputs});
    all.push_back(MaskedSample{std::vector<ValueIndex>(8, kMasked)});
    y.push_back(s.label);
  }
  CHECK(logical_accuracy(p.spec, p.domain, none, y) == 100.0);
  CHECK(statistical_logical_accuracy(p.spec, p.domain, none, y) == 100.0);
  CHECK(logical_accuracy(p.spec, p.domain, all, y) == 0.0);
  // Fully masked AND-top predicts the majority class 0.
  CHECK(statistical_logical_accuracy(p.spec, p.domain, all, y) == doctest::Approx(100.0 * 232 / 256));

  const Sample neg = make(p.spec, p.domain, {P, N, P, P, P, N, P, P});
  CHECK(logical_correct(p.spec, p.domain, mask_of(neg, {0, 2, 3, 4, 5, 6, 7}), 0));

  // And gate with two masked inputs, everything else positive or decided.
  const FormulaSpec single({1, 3}, {0, 1}, {0, 1}, 1, GateKind::And);
  const Sample s = make(single, p.domain, {P, P, P, N});
  CHECK(statistical_prediction(single, p.domain, mask_of(s, {0, 1})) == 0);
  // Exactly 0.5 ties to class 0.
  const FormulaSpec one({1, 1}, {0, 1}, {0, 1}, 1, GateKind::And);
  CHECK(statistical_prediction(one, p.domain, MaskedSample{{kMasked, P}}) == 0);

  std::mt19937_64 rng(2);
  for (GateKind top : {GateKind::And, GateKind::Or, GateKind::Xor}) {
    const auto q = make_preset("2inQuaternary", top);
    const auto sample = sample_dataset(q.spec, q.domain, 400, 3);
    std::vector<MaskedSample> m;
    std::vector<int> labels;
    for (const auto& x : sample.samples) {
      MaskedSample ms{x.inputs};
      for (auto& v : ms.entries) {
        if (rng() % 3 == 0) v = kMasked;
      }
      m.push_back(ms);
      labels.push_back(x.label);
    }
    CHECK(statistical_logical_accuracy(q.spec, q.domain, m, labels) >= logical_accuracy(q.spec, q.domain, m, labels));
  }
}

TEST_CASE("Full-DCA") {
  const auto p = make_preset("2inBinary", GateKind::Xor);
  const Sample a = make(p.spec, p.domain, {P, P, N, N, N, N, P, N});
  const Sample b = make(p.spec, p.domain, {P, P, N, N, N, N, N, P});
  // Same non-baseline pattern; baseline differs and is ignored in the key.
  const std::vector<MaskedSample> m{MaskedSample{a.inputs}, MaskedSample{b.inputs}};

  const std::vector<int> same{1, 1};
  auto r = full_dca(p.spec, m, same, same);
  CHECK(*r.sample_weighted == 0.0);

  const std::vector<int> split{0, 1};
  r = full_dca(p.spec, m, split, split);
  CHECK(*r.sample_weighted == 100.0);
  CHECK(*r.group_weighted == 100.0);
  CHECK(r.conflicting_groups == 1);

  const std::vector<int> flipped{1, 0};
  r = full_dca(p.spec, m, split, flipped);
  CHECK(r.considered == 0);
  CHECK_FALSE(r.sample_weighted.has_value());
}

TEST_CASE("Minimal-DCA") {
  const auto p = make_preset("2inBinary", GateKind::And);
  SUBCASE("And-top pivotal gate is the only false gate") {
    const Sample s = make(p.spec, p.domain, {N, P, P, P, P, N, N, N});
    const auto v = gate_values(p.spec, p.domain, s.inputs);
    CHECK(is_pivotal(p.spec, v, 0));
    CHECK_FALSE(is_pivotal(p.spec, v, 1));
    const Sample two = make(p.spec, p.domain, {N, P, N, N, P, N, N, N});
    const auto w = gate_values(p.spec, p.domain, two.inputs);
    CHECK_FALSE(is_pivotal(p.spec, w, 0));
  }
  SUBCASE("one key with contradictory implications") {
    // Both samples pivotal on the And gate with key (masked, +1).
    const Sample a = make(p.spec, p.domain, {N, P, P, P, P, N, N, N});
    const Sample b = make(p.spec, p.domain, {P, P, P, P, P, N, N, N});
    const std::vector<Sample> orig{a, b};
    const std::vector<MaskedSample> m{mask_of(a, {0, 6, 7}), mask_of(b, {0, 6, 7})};
    // Identical masked keys, but the predictions imply different gate outputs.
    const std::vector<int> pred{0, 1};
    const auto r = minimal_dca(p.spec, p.domain, orig, m, pred);
    CHECK(r.conflicting_keys[0] == 1);
    CHECK(*r.per_gate[0] == 100.0);
    const std::vector<int> agree{0, 0};
    CHECK(minimal_dca(p.spec, p.domain, orig, m, agree).conflicting_keys[0] == 0);
  }
  SUBCASE("no pivotal samples leaves the gate undefined") {
    const Sample s = make(p.spec, p.domain, {N, N, N, N, N, N, N, N});
    const std::vector<Sample> orig{s};
    const std::vector<MaskedSample> m{MaskedSample{s.inputs}};
    const std::vector<int> pred{0};
    const auto r = minimal_dca(p.spec, p.domain, orig, m, pred);
    for (const auto& g : r.per_gate) CHECK_FALSE(g.has_value());
    CHECK_FALSE(r.aggregate.has_value());
  }
  SUBCASE("perfect information-preserving masks give zero on every top level") {
    for (GateKind top : {GateKind::And, GateKind::Or, GateKind::Xor}) {
      const auto q = make_preset("2inBinary", top);
      const auto ds = enumerate_dataset(q.spec, q.domain);
      const auto sets = structural_r_min_all(ds);
      std::vector<MaskedSample> m;
      std::vector<int> pred;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto plan = compute_mask(oracle_scores(q.spec, sets[i]), ThresholdRule::baseline_max(), q.spec);
        m.push_back(apply_mask(ds.samples[i], plan));
        pred.push_back(ds.samples[i].label);
      }
      const auto r = minimal_dca(q.spec, q.domain, ds.samples, m, pred);
      REQUIRE(r.aggregate.has_value());
      CHECK(*r.aggregate == 0.0);
      CHECK(*full_dca(q.spec, m, pred, pred).sample_weighted == 0.0);
    }
  }
}
