#include <benchmark/benchmark.h>

#include "andor/attribution.hpp"
#include "andor/data.hpp"
#include "andor/logic.hpp"
#include "andor/metrics.hpp"
#include "andor/net.hpp"
#include "andor/pipeline.hpp"
#include "andor/reasoning.hpp"

using namespace andor;

namespace {

const Preset& preset(int which) {
  static const Preset presets[] = {make_preset("2inBinary", GateKind::Xor), make_preset("2inQuaternary", GateKind::Xor),
                                   make_preset("3inBinary", GateKind::Xor)};
  return presets[which];
}

void BM_Enumerate(benchmark::State& state) {
  const auto& p = preset(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_dataset(p.spec, p.domain));
}
BENCHMARK(BM_Enumerate)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_StructuralRMin(benchmark::State& state) {
  const auto& p = preset(static_cast<int>(state.range(0)));
  const auto ds = sample_dataset(p.spec, p.domain, 256, 1);
  for (auto _ : state) {
    for (const auto& s : ds.samples) benchmark::DoNotOptimize(structural_r_min(p.spec, p.domain, s));
  }
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_StructuralRMin)->DenseRange(0, 2);

void BM_BruteForceRMin(benchmark::State& state) {
  const auto& p = preset(static_cast<int>(state.range(0)));
  const auto ds = sample_dataset(p.spec, p.domain, 16, 2);
  for (auto _ : state) {
    for (const auto& s : ds.samples) benchmark::DoNotOptimize(brute_force_r_min(p.spec, p.domain, s));
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_BruteForceRMin)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_Attribution(benchmark::State& state) {
  const NetModel m(NetConfig::for_inputs(8, {32}, Activation::Relu, 3));
  const std::string name = implemented_method_names()[static_cast<std::size_t>(state.range(0))];
  MethodSpec spec{parse_method_kind(name)};
  const std::vector<double> x{1, -1, 1, 1, -1, 1, -1, -1};
  state.SetLabel(name);
  if (spec.kind == MethodKind::FeaturePermutation) {
    // Dataset-level method: time the whole 2inBinary batch.
    const auto data = to_labeled(enumerate_dataset(preset(0).spec, preset(0).domain));
    state.SetLabel(name + " (256-row batch)");
    for (auto _ : state) benchmark::DoNotOptimize(attribute_batch(m, data, spec));
    return;
  }
  for (auto _ : state) benchmark::DoNotOptimize(attribute(m, x, spec));
}
BENCHMARK(BM_Attribution)->DenseRange(0, static_cast<int>(implemented_method_names().size()) - 1);

void BM_TrainBinary(benchmark::State& state) {
  auto config = preset_config("2inBinary");
  config.top_levels = {GateKind::Xor};
  const auto setup = prepare_top(config, 0);
  for (auto _ : state) benchmark::DoNotOptimize(train_base_model(config, setup, 0));
}
BENCHMARK(BM_TrainBinary)->Unit(benchmark::kMillisecond);

void BM_GridCell(benchmark::State& state) {
  // Smallest grid: one top level, two folds, one method, one threshold.
  auto config = preset_config("2inBinary");
  config.top_levels = {GateKind::Xor};
  config.train.folds = 2;
  config.train_forest = false;
  config.methods.resize(1);
  config.thresholds.resize(1);
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(config));
}
BENCHMARK(BM_GridCell)->Unit(benchmark::kMillisecond);

}  // namespace
