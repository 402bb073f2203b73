#include "andor/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "andor/errors.hpp"
#include "andor/forest.hpp"

namespace andor {

// ---- masking -------------------------------------------------------------

std::size_t MaskPlan::masked_count() const {
  return static_cast<std::size_t>(std::count(masked.begin(), masked.end(), true));
}

double MaskPlan::masked_fraction() const {
  return masked.empty() ? 0.0 : static_cast<double>(masked_count()) / static_cast<double>(masked.size());
}

MaskPlan compute_mask(std::span<const double> scores, const ThresholdRule& rule, const FormulaSpec& spec) {
  if (scores.size() != spec.input_len()) throw InputError("score vector length does not match the formula");
  MaskPlan plan;
  plan.rule = rule;
  plan.masked.resize(scores.size());
  if (rule.kind == ThresholdKind::BaselineMax) {
    if (spec.baseline_len() == 0) throw ConfigError("baseline threshold needs a nonempty baseline block");
    plan.threshold = *std::max_element(scores.begin() + static_cast<std::ptrdiff_t>(spec.baseline_begin()), scores.end());
    for (std::size_t i = 0; i < scores.size(); ++i) plan.masked[i] = scores[i] <= plan.threshold;
  } else {
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    plan.threshold = rule.factor * mean;
    for (std::size_t i = 0; i < scores.size(); ++i) plan.masked[i] = scores[i] < plan.threshold;
  }
  return plan;
}

MaskedSample apply_mask(const Sample& sample, const MaskPlan& plan) {
  if (plan.masked.size() != sample.inputs.size()) throw InputError("mask length does not match the sample");
  MaskedSample out{sample.inputs};
  for (std::size_t i = 0; i < plan.masked.size(); ++i) {
    if (plan.masked[i]) out.entries[i] = kMasked;
  }
  return out;
}

std::vector<double> masked_numeric(const Domain& domain, const MaskedSample& masked) {
  return to_numeric(domain, masked.entries);
}

RetrainResult roar_retrain(const NetConfig& net, const TrainConfig& train, const LabeledData& masked_train,
                           const LabeledData& masked_validation, const LabeledData& masked_test) {
  NetModel model(net);
  LabeledData fit_rows = masked_train;
  if (train.oversample && masked_train.count_label(0) > 0 && masked_train.count_label(1) > 0) {
    fit_rows = oversample_balance(masked_train, mix_seed(train.seed, 7));
  }
  RetrainResult r{std::move(model), 0.0, 0.0, {}, {}};
  r.fit = fit(r.model, train, fit_rows, masked_validation);
  r.train_accuracy = r.model.accuracy(masked_train);
  r.test_accuracy = r.model.accuracy(masked_test);
  r.test_predictions.reserve(masked_test.rows());
  for (std::size_t i = 0; i < masked_test.rows(); ++i) r.test_predictions.push_back(r.model.predict(masked_test.row(i)));
  return r;
}

// ---- metrics bundle ------------------------------------------------------

MetricsReport compute_metrics(const CellInputs& in) {
  const Dataset& ds = *in.dataset;
  const FormulaSpec& spec = ds.spec;
  const std::size_t n = in.sample_ids.size();
  std::vector<int> labels(n);
  std::vector<Sample> originals;
  originals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    originals.push_back(ds.samples[in.sample_ids[i]]);
    labels[i] = originals.back().label;
  }

  MetricsReport m;
  auto flags = [&](auto&& pred) {
    std::vector<bool> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = pred(i);
    return f;
  };
  auto rate = [&](const std::vector<bool>& f) { return rate_by_class(f, labels); };

  if (spec.baseline_len() > 0 && !in.scores.empty()) {
    m.nib_strict = rate(flags([&](std::size_t i) {
      return nib_violation(in.scores[i], in.reasoning[i], spec, NibVariant::Strict);
    }));
    m.nib_coverage = rate(flags([&](std::size_t i) {
      return nib_violation(in.scores[i], in.reasoning[i], spec, NibVariant::Coverage);
    }));
    m.gib = rate(flags([&](std::size_t i) { return gib_violation(in.scores[i], in.reasoning[i], spec); }));
  }
  m.logical_accuracy = rate(flags([&](std::size_t i) { return logical_correct(spec, ds.domain, in.masked[i], labels[i]); }));
  m.statistical_logical_accuracy = rate(flags([&](std::size_t i) {
    return statistical_prediction(spec, ds.domain, in.masked[i]) == labels[i];
  }));

  {
    double sum[3] = {0, 0, 0};
    std::size_t cnt[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const double f = static_cast<double>(in.masked[i].masked_count()) / static_cast<double>(spec.input_len());
      sum[2] += f;
      ++cnt[2];
      sum[labels[i]] += f;
      ++cnt[labels[i]];
    }
    auto mean = [&](int k) -> std::optional<double> {
      if (cnt[k] == 0) return std::nullopt;
      return 100.0 * sum[k] / static_cast<double>(cnt[k]);
    };
    m.mask_fraction = ClassRate{mean(2), mean(0), mean(1)};
  }

  if (!in.retrained_predictions.empty()) {
    m.retrained_accuracy = rate(flags([&](std::size_t i) { return in.retrained_predictions[i] == labels[i]; }));
    const double retrained = m.retrained_accuracy.all.value_or(0.0);
    m.logical_acc_diff = retrained - m.logical_accuracy.all.value_or(0.0);
    m.statistical_logical_acc_diff = retrained - m.statistical_logical_accuracy.all.value_or(0.0);
    if (!in.base_predictions.empty()) {
      m.full_dca = full_dca(spec, in.masked, in.base_predictions, in.retrained_predictions);
    }
    MinimalDcaOptions opts;
    opts.require_unique_rmin = in.require_unique_rmin;
    opts.reasoning = in.reasoning;
    m.minimal_dca = minimal_dca(spec, ds.domain, originals, in.masked, in.retrained_predictions, opts);
  }
  return m;
}

// ---- grid ----------------------------------------------------------------

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::Ok: return "ok";
    case CellStatus::Filtered: return "filtered";
    case CellStatus::Failed: return "failed";
  }
  return "?";
}

std::size_t RunResult::count(CellStatus s) const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [s](const CellResult& c) { return c.status == s; }));
}

Dataset build_dataset(const ExperimentConfig& config, GateKind top) {
  const FormulaSpec spec = config.formula(top);
  const Domain domain = config.domain();
  const double full = std::pow(static_cast<double>(domain.size()), static_cast<double>(spec.input_len()));
  if (config.sample_limit == 0 || static_cast<double>(config.sample_limit) >= full) {
    return enumerate_dataset(spec, domain, config.enumeration_budget);
  }
  if (full <= static_cast<double>(config.enumeration_budget)) {
    // Subset of the enumeration without replacement, kept in enumeration order.
    Dataset all = enumerate_dataset(spec, domain, config.enumeration_budget);
    std::vector<std::size_t> idx(all.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(mix_seed(config.seed, 0xDA7A));
    for (std::size_t i = 0; i < config.sample_limit; ++i) std::swap(idx[i], idx[i + rng() % (idx.size() - i)]);
    idx.resize(config.sample_limit);
    std::sort(idx.begin(), idx.end());
    Dataset out{spec, domain, {}};
    out.samples.reserve(idx.size());
    for (std::size_t i : idx) out.samples.push_back(all.samples[i]);
    return out;
  }
  return sample_dataset(spec, domain, config.sample_limit, mix_seed(config.seed, 0xDA7A));
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min(jobs, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

LabeledData masked_rows(const Dataset& ds, std::span<const std::size_t> ids,
                        const std::vector<MaskedSample>& masked_by_sample) {
  LabeledData out;
  out.cols = ds.spec.input_len();
  for (std::size_t id : ids) out.push(masked_numeric(ds.domain, masked_by_sample[id]), ds.samples[id].label);
  return out;
}

TrainConfig base_train_config(const ExperimentConfig& config, std::size_t top_index) {
  TrainConfig tc = config.train;
  tc.seed = mix_seed(config.seed, 20 + top_index);
  return tc;
}

std::size_t method_job(const ExperimentConfig& config, std::size_t top_index, std::size_t fold,
                       std::size_t method_index) {
  return (top_index * config.train.folds + fold) * config.methods.size() + method_index;
}

}  // namespace

TopSetup prepare_top(const ExperimentConfig& config, std::size_t top_index) {
  if (top_index >= config.top_levels.size()) throw ConfigError("top-level index out of range");
  const GateKind top = config.top_levels[top_index];
  TopSetup ctx{top, top_index, build_dataset(config, top), {}, {}, {}, {}};
  std::vector<int> labels;
  for (const auto& s : ctx.dataset.samples) labels.push_back(s.label);
  ctx.split = split_dataset(labels, config.split_mode, config.train_ratio, mix_seed(config.seed, 10 + top_index));
  ctx.folds = cv_folds(base_train_config(config, top_index), ctx.dataset, ctx.split);
  ctx.reasoning = structural_r_min_all(ctx.dataset);
  std::set_union(ctx.split.train.begin(), ctx.split.train.end(), ctx.split.test.begin(), ctx.split.test.end(),
                 std::back_inserter(ctx.attributed));
  return ctx;
}

FoldModel train_base_model(const ExperimentConfig& config, const TopSetup& setup, std::size_t fold) {
  const NetConfig net = NetConfig::for_inputs(setup.dataset.spec.input_len(), config.hidden, config.activation,
                                              mix_seed(config.seed, 30 + setup.top_index));
  return train_fold(net, base_train_config(config, setup.top_index), setup.dataset, setup.split, setup.folds, fold);
}

FoldModel restore_base_model(const TopSetup& setup, std::size_t fold, NetModel model) {
  if (fold >= setup.folds.size()) throw ConfigError("fold index out of range");
  std::vector<std::size_t> fold_train;
  for (std::size_t j = 0; j < setup.folds.size(); ++j) {
    if (j != fold) fold_train.insert(fold_train.end(), setup.folds[j].begin(), setup.folds[j].end());
  }
  std::sort(fold_train.begin(), fold_train.end());
  FoldModel fm{fold, std::move(model), fold_train, setup.folds[fold], 0.0, 0.0, 0.0, {}};
  fm.train_accuracy = fm.model.accuracy(to_labeled(setup.dataset, fm.train_indices));
  fm.validation_accuracy = fm.model.accuracy(to_labeled(setup.dataset, fm.validation_indices));
  fm.test_accuracy = fm.model.accuracy(to_labeled(setup.dataset, setup.split.test));
  return fm;
}

std::vector<double> train_comparison_forest(const ExperimentConfig& config, const TopSetup& setup,
                                            const FoldModel& base) {
  const std::size_t job = setup.top_index * config.train.folds + base.fold;
  ForestConfig fc = config.forest;
  fc.seed = mix_seed(config.seed, 40 + job);
  std::vector<int> labels;
  for (const auto& s : setup.dataset.samples) labels.push_back(s.label);
  const auto rows = oversample_indices(base.train_indices, labels, mix_seed(config.seed, 50 + job));
  return train_forest(fc, to_labeled(setup.dataset, rows)).gini_importances();
}

std::vector<std::vector<double>> attribute_setup(const ExperimentConfig& config, const TopSetup& setup,
                                                 const NetModel& model, std::size_t fold, std::size_t method_index) {
  const MethodEntry& method = config.methods.at(method_index);
  if (method.external) throw ConfigError("method '" + method.name + "' is external; ingest its scores instead");
  const Dataset& ds = setup.dataset;
  MethodSpec spec = method.spec;
  spec.seed = mix_seed(config.seed, 1000 + method_job(config, setup.top_index, fold, method_index));
  const auto attr_scores = attribute_batch(model, to_labeled(ds, setup.attributed), spec);
  std::vector<std::vector<double>> scores(ds.size());
  for (std::size_t r = 0; r < setup.attributed.size(); ++r) scores[setup.attributed[r]] = attr_scores[r];
  return scores;
}

std::vector<MaskedSample> mask_setup(const ExperimentConfig& config, const TopSetup& setup,
                                     const std::vector<std::vector<double>>& scores, std::size_t threshold_index) {
  const Dataset& ds = setup.dataset;
  if (scores.size() != ds.size()) throw InputError("score table does not cover the dataset");
  std::vector<MaskedSample> masked(ds.size());
  for (std::size_t id : setup.attributed) {
    masked[id] = apply_mask(ds.samples[id], compute_mask(scores[id], config.thresholds.at(threshold_index), ds.spec));
  }
  return masked;
}

RetrainResult retrain_setup(const ExperimentConfig& config, const TopSetup& setup, const FoldModel& base,
                            const std::vector<MaskedSample>& masked, std::size_t method_index,
                            std::size_t threshold_index) {
  const Dataset& ds = setup.dataset;
  const LabeledData train_rows = masked_rows(ds, base.train_indices, masked);
  const LabeledData val_rows = masked_rows(ds, base.validation_indices, masked);
  const LabeledData test_rows = masked_rows(ds, setup.split.test, masked);
  const std::uint64_t cell_seed =
      mix_seed(config.seed, 100000 + method_job(config, setup.top_index, base.fold, method_index) * 16 + threshold_index);
  const NetConfig net =
      NetConfig::for_inputs(ds.spec.input_len(), config.hidden, config.activation, mix_seed(cell_seed, 1));
  TrainConfig tc = config.train;
  tc.max_epochs = config.retrain_max_epochs;
  tc.seed = mix_seed(cell_seed, 2);
  return roar_retrain(net, tc, train_rows, val_rows, test_rows);
}

MetricsReport evaluate_setup(const ExperimentConfig& config, const TopSetup& setup, const NetModel& base_model,
                             const std::vector<std::vector<double>>& scores, const std::vector<MaskedSample>& masked,
                             std::span<const int> retrained_test_predictions) {
  const Dataset& ds = setup.dataset;
  std::vector<ReasoningSets> test_reasoning;
  std::vector<std::vector<double>> test_scores;
  std::vector<MaskedSample> test_masked;
  std::vector<int> base_pred;
  for (std::size_t id : setup.split.test) {
    test_reasoning.push_back(setup.reasoning[id]);
    test_scores.push_back(scores.at(id));
    test_masked.push_back(masked.at(id));
    base_pred.push_back(base_model.predict(to_numeric(ds.domain, ds.samples[id].inputs)));
  }
  CellInputs in;
  in.dataset = &ds;
  in.sample_ids = setup.split.test;
  in.reasoning = test_reasoning;
  in.scores = test_scores;
  in.masked = test_masked;
  in.base_predictions = base_pred;
  in.retrained_predictions = retrained_test_predictions;
  in.require_unique_rmin = config.require_unique_rmin;
  return compute_metrics(in);
}

std::vector<std::vector<double>> external_score_table(const TopSetup& setup,
                                                      const std::map<std::size_t, std::vector<double>>& given) {
  const Dataset& ds = setup.dataset;
  std::vector<std::vector<double>> scores(ds.size());
  for (std::size_t id : setup.attributed) {
    auto it = given.find(id);
    if (it == given.end()) throw InputError("no ingested scores for sample " + std::to_string(id));
    if (it->second.size() != ds.spec.input_len()) {
      throw InputError("ingested scores for sample " + std::to_string(id) + " have the wrong length");
    }
    scores[id] = it->second;
  }
  return scores;
}

RunResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress, const ExternalScores* external) {
  config.validate();
  RunResult run;
  run.config_hash = config_hash(config);
  run.seed = config.seed;
  const std::size_t n_tops = config.top_levels.size();
  const std::size_t n_folds = config.train.folds;
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_thresholds = config.thresholds.size();

  std::vector<TopSetup> tops;
  tops.reserve(n_tops);
  for (std::size_t t = 0; t < n_tops; ++t) tops.push_back(prepare_top(config, t));

  // Base models (and comparison forests), one job per (top, fold).
  struct BaseSlot {
    std::optional<FoldModel> model;
    BaseModelResult result;
  };
  std::vector<BaseSlot> bases(n_tops * n_folds);
  parallel_for(bases.size(), config.jobs, [&](std::size_t job) {
    const std::size_t t = job / n_folds, k = job % n_folds;
    BaseSlot& slot = bases[job];
    slot.result.dataset = config.dataset_name;
    slot.result.top_level = tops[t].top;
    slot.result.fold = k;
    try {
      slot.model = train_base_model(config, tops[t], k);
      slot.result.train_accuracy = slot.model->train_accuracy;
      slot.result.validation_accuracy = slot.model->validation_accuracy;
      slot.result.test_accuracy = slot.model->test_accuracy;
      slot.result.epochs = slot.model->fit.epochs;
      if (config.train_forest) slot.result.forest_importances = train_comparison_forest(config, tops[t], *slot.model);
    } catch (const std::exception& e) {
      slot.result.error = e.what();
    }
  });
  for (const auto& b : bases) run.base_models.push_back(b.result);

  // Cells: one job per (top, fold, method) covering all thresholds.
  run.cells.resize(n_tops * n_folds * n_methods * n_thresholds);
  std::mutex progress_mutex;
  parallel_for(n_tops * n_folds * n_methods, config.jobs, [&](std::size_t job) {
    const std::size_t t = job / (n_folds * n_methods);
    const std::size_t k = (job / n_methods) % n_folds;
    const std::size_t mi = job % n_methods;
    const TopSetup& ctx = tops[t];
    const BaseSlot& base = bases[t * n_folds + k];
    const MethodEntry& method = config.methods[mi];

    auto cell_at = [&](std::size_t ti) -> CellResult& { return run.cells[job * n_thresholds + ti]; };
    for (std::size_t ti = 0; ti < n_thresholds; ++ti) {
      CellResult& c = cell_at(ti);
      c.dataset = config.dataset_name;
      c.top_level = ctx.top;
      c.split = config.split_mode;
      c.fold = k;
      c.method = method.name;
      c.threshold = config.thresholds[ti].name();
      c.base_test_accuracy = base.result.test_accuracy;
      c.evaluated_samples = ctx.split.test.size();
    }
    auto finish_all = [&](CellStatus status, const std::string& error) {
      for (std::size_t ti = 0; ti < n_thresholds; ++ti) {
        cell_at(ti).status = status;
        cell_at(ti).error = error;
      }
    };

    if (!base.model) {
      finish_all(CellStatus::Failed, "base model: " + base.result.error);
    } else if (config.only_100acc && base.result.test_accuracy < 1.0) {
      finish_all(CellStatus::Filtered, "base model below 100% test accuracy");
    } else if (method.external && (!external || !external->count({method.name, ctx.top}))) {
      finish_all(CellStatus::Failed, "external method: no ingested scores");
    } else {
      try {
        const auto scores = method.external ? external_score_table(ctx, external->at({method.name, ctx.top}))
                                            : attribute_setup(config, ctx, base.model->model, k, mi);
        for (std::size_t ti = 0; ti < n_thresholds; ++ti) {
          CellResult& c = cell_at(ti);
          try {
            const auto masked = mask_setup(config, ctx, scores, ti);
            const RetrainResult retrained = retrain_setup(config, ctx, *base.model, masked, mi, ti);
            c.metrics = evaluate_setup(config, ctx, base.model->model, scores, masked, retrained.test_predictions);
            c.status = CellStatus::Ok;
          } catch (const std::exception& e) {
            c.status = CellStatus::Failed;
            c.error = e.what();
          }
        }
      } catch (const std::exception& e) {
        finish_all(CellStatus::Failed, e.what());
      }
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      for (std::size_t ti = 0; ti < n_thresholds; ++ti) progress(cell_at(ti));
    }
  });
  return run;
}

}  // namespace andor
