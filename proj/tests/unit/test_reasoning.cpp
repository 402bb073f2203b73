#include <doctest.h>

#include <random>

#include "andor/errors.hpp"
#include "andor/logic.hpp"
#include "andor/reasoning.hpp"
#include "oracles.hpp"

using namespace andor;

namespace {

// Binary alphabet indices: 0 -> -1, 1 -> +1.
constexpr ValueIndex N = 0, P = 1;

Sample make(const FormulaSpec& spec, const Domain& d, std::vector<ValueIndex> x) {
  Sample s{std::move(x), 0};
  s.label = eval_sample(spec, d, s.inputs);
  return s;
}

std::vector<InputSet> sets(std::initializer_list<std::initializer_list<std::size_t>> lists) {
  std::vector<InputSet> out;
  for (auto l : lists) out.push_back(InputSet::of(l));
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("input set order is lexicographic over index lists") {
  CHECK(InputSet::of({0, 5}) < InputSet::of({1}));
  CHECK(InputSet::of({0}) < InputSet::of({0, 1}));
  CHECK_FALSE(InputSet::of({2}) < InputSet::of({1, 7}));
  CHECK(InputSet::range(2, 5).indices() == std::vector<std::size_t>{2, 3, 4});
}

TEST_CASE("sufficiency basics") {
  const auto p = make_preset("2inBinary", GateKind::And);
  const Sample s = make(p.spec, p.domain, {N, N, P, P, P, N, N, P});
  CHECK(is_sufficient(p.spec, p.domain, s, InputSet::range(0, 8)));
  CHECK_FALSE(is_sufficient(p.spec, p.domain, s, InputSet{}));
  CHECK(is_sufficient(p.spec, p.domain, s, InputSet::of({1})));

  const FormulaSpec single({1, 2}, {0, 1}, {0, 1}, 0, GateKind::And);
  const Sample g = make(single, p.domain, {P, N});
  CHECK(g.label == 0);
  CHECK(is_sufficient(single, p.domain, g, InputSet::of({1})));
  CHECK_FALSE(is_sufficient(single, p.domain, g, InputSet::of({0})));
}

TEST_CASE("documented reasoning examples") {
  const auto p = make_preset("2inBinary", GateKind::And);

  SUBCASE("AND-top negative And gate") {
    const Sample s = make(p.spec, p.domain, {N, N, P, P, P, N, N, P});
    CHECK(brute_force_r_min(p.spec, p.domain, s).r_min == sets({{0}, {1}}));
    CHECK(structural_r_min(p.spec, p.domain, s).r_min == sets({{0}, {1}}));
  }
  SUBCASE("AND-top label 1 needs five inputs") {
    const Sample s = make(p.spec, p.domain, {P, P, P, N, N, P, N, N});
    REQUIRE(s.label == 1);
    const auto r = brute_force_r_min(p.spec, p.domain, s);
    REQUIRE(r.r_min.size() == 1);
    CHECK(r.r_min[0] == InputSet::of({0, 1, 2, 4, 5}));
    CHECK(relevant_inputs(r) == InputSet::of({0, 1, 2, 4, 5}));
  }
  SUBCASE("single Xor gate with two positives") {
    const FormulaSpec x({0, 1}, {0, 1}, {1, 2}, 0, GateKind::Xor);
    const Sample s = make(x, p.domain, {P, P});
    CHECK(brute_force_r_min(x, p.domain, s).r_min == sets({{0, 1}}));
    CHECK(structural_r_min(x, p.domain, s).r_min == sets({{0, 1}}));
  }
  SUBCASE("single And gate with two negatives") {
    const FormulaSpec a({1, 2}, {0, 1}, {0, 1}, 0, GateKind::And);
    const Sample s = make(a, p.domain, {N, N});
    const auto r = structural_r_min(a, p.domain, s);
    CHECK(r.r_min == sets({{0}, {1}}));
    CHECK(relevant_inputs(r) == InputSet::of({0, 1}));
  }
  SUBCASE("Or-top with exactly one true gate uses its positive singletons") {
    const auto o = make_preset("2inBinary", GateKind::Or);
    // And false, Or true via input 3 only, Xor false (both negative).
    const Sample s = make(o.spec, o.domain, {N, P, N, P, N, N, P, P});
    CHECK(s.label == 1);
    CHECK(structural_r_min(o.spec, o.domain, s).r_min == sets({{3}}));
  }
  SUBCASE("all-negative Xor gate contributes its full input set") {
    const auto x = make_preset("2inBinary", GateKind::And);
    // And true, Or true, Xor false with no positives: And-top false through Xor only.
    const Sample s = make(x.spec, x.domain, {P, P, P, P, N, N, N, N});
    CHECK(s.label == 0);
    const auto r = structural_r_min(x.spec, x.domain, s);
    for (InputSet m : r.r_min) CHECK((m & InputSet::of({4, 5})) == InputSet::of({4, 5}));
  }
}

TEST_CASE("structural oracle matches an exhaustive subset scan on 2inBinary") {
  for (GateKind top : {GateKind::And, GateKind::Or, GateKind::Xor}) {
    const auto p = make_preset("2inBinary", top);
    const auto ds = enumerate_dataset(p.spec, p.domain);
    for (const auto& s : ds.samples) {
      const auto expected = oracle::r_min(p.spec, p.domain, s);
      CHECK(structural_r_min(p.spec, p.domain, s).r_min == expected);
      CHECK(brute_force_r_min(p.spec, p.domain, s).r_min == expected);
    }
  }
}

TEST_CASE("reasoning set invariants on random samples") {
  std::mt19937_64 rng(11);
  for (const char* name : {"2inQuaternary", "3inBinary"}) {
    for (GateKind top : {GateKind::And, GateKind::Or, GateKind::Xor}) {
      const auto p = make_preset(name, top);
      const auto ds = sample_dataset(p.spec, p.domain, 40, rng());
      for (const auto& s : ds.samples) {
        const auto r = structural_r_min(p.spec, p.domain, s);
        REQUIRE_FALSE(r.r_min.empty());
        CHECK(std::is_sorted(r.r_min.begin(), r.r_min.end()));
        for (InputSet m : r.r_min) {
          CHECK(m.size() == r.min_size());
          CHECK(is_sufficient(p.spec, p.domain, s, m));
          for (std::size_t i : m.indices()) {
            InputSet smaller = m;
            smaller.erase(i);
            CHECK_FALSE(is_sufficient(p.spec, p.domain, s, smaller));
          }
        }
        CHECK(is_sufficient(p.spec, p.domain, s, r.relevant));
        CHECK((r.relevant & InputSet::range(p.spec.baseline_begin(), p.spec.input_len())).empty());
      }
    }
  }
}

TEST_CASE("brute force refuses formulas beyond its budget") {
  const FormulaSpec big({2, 4}, {1, 2}, {1, 2}, 2, GateKind::And);
  const Domain d({Rational(-1), Rational(1)}, {Rational(1)});
  const Sample s{std::vector<ValueIndex>(14, 1), 1};
  CHECK_THROWS_AS(brute_force_r_min(big, d, s), BudgetError);
  CHECK_NOTHROW(brute_force_r_min(big, d, s, OracleBudget{14, 2}));
}

TEST_CASE("oracle scores rank the canonical set first") {
  const auto p = make_preset("2inBinary", GateKind::And);
  const Sample s = make(p.spec, p.domain, {N, N, P, P, P, N, N, P});
  const auto r = structural_r_min(p.spec, p.domain, s);
  const auto sc = oracle_scores(p.spec, r);
  CHECK(sc == std::vector<double>{1.0, 0.5, 0, 0, 0, 0, 0, 0});
}

TEST_CASE("reasoning JSONL round trip") {
  const auto p = make_preset("2inBinary", GateKind::Xor);
  const auto all = structural_r_min_all(enumerate_dataset(p.spec, p.domain));
  const auto back = reasoning_from_jsonl(reasoning_to_jsonl(all));
  REQUIRE(back.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(back[i].sample_id == all[i].sample_id);
    CHECK(back[i].r_min == all[i].r_min);
    CHECK(back[i].relevant == all[i].relevant);
  }
  CHECK_THROWS_AS(reasoning_from_jsonl("{\"sample_id\": 1}\n"), InputError);
}
