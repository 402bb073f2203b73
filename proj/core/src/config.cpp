#include "andor/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "andor/errors.hpp"

namespace andor {

using nlohmann::json;

// ---- thresholds ----------------------------------------------------------

ThresholdRule ThresholdRule::avg_factor(double f) {
  if (!(f > 0.0)) throw ConfigError("threshold factor must be positive");
  return {ThresholdKind::AvgFactor, f};
}

std::string ThresholdRule::name() const {
  if (kind == ThresholdKind::BaselineMax) return "baseline";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", factor);
  std::string s(buf);
  if (s.find('.') == std::string::npos) s += ".0";
  return "t" + s;
}

ThresholdRule ThresholdRule::parse(std::string_view name) {
  if (name == "baseline" || name == "baseline_max") return baseline_max();
  if (name.size() > 1 && name.front() == 't') {
    try {
      std::size_t used = 0;
      const std::string rest(name.substr(1));
      const double f = std::stod(rest, &used);
      if (used == rest.size()) return avg_factor(f);
    } catch (const std::logic_error&) {
    }
  }
  throw ConfigError("unknown threshold '" + std::string(name) + "'");
}

std::vector<ThresholdRule> default_thresholds() {
  return {ThresholdRule::baseline_max(), ThresholdRule::avg_factor(1.0), ThresholdRule::avg_factor(0.8),
          ThresholdRule::avg_factor(0.5)};
}

// ---- methods -------------------------------------------------------------

std::vector<MethodEntry> default_methods() {
  std::vector<MethodEntry> out;
  for (const auto& name : implemented_method_names()) {
    MethodEntry e;
    e.name = name;
    e.spec.kind = parse_method_kind(name);
    e.spec.ig_steps = 64;
    e.spec.lrp_epsilon = 1e-6;
    e.spec.permutation_repeats = 5;
    out.push_back(e);
  }
  return out;
}

// ---- config --------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (dataset_name.empty()) throw ConfigError("dataset name must not be empty");
  (void)domain();
  for (GateKind top : top_levels) (void)formula(top);
  if (top_levels.empty()) throw ConfigError("at least one top level is required");
  if (split_mode == SplitMode::Split && !(train_ratio > 0.0 && train_ratio < 1.0)) {
    throw ConfigError("train_ratio must lie in (0, 1)");
  }
  if (hidden.empty()) throw ConfigError("at least one hidden layer is required");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("hidden widths must be positive");
  }
  train.validate();
  forest.validate();
  if (retrain_max_epochs == 0) throw ConfigError("retrain_max_epochs must be positive");
  std::set<std::string> names;
  for (const auto& m : methods) {
    if (!names.insert(m.name).second) throw ConfigError("duplicate method '" + m.name + "'");
    if (m.external) {
      continue;
    }
    m.spec.validate();
  }
  if (thresholds.empty()) throw ConfigError("at least one threshold is required");
  for (const auto& t : thresholds) {
    if (t.kind == ThresholdKind::BaselineMax && baseline_len == 0) {
      throw ConfigError("the baseline threshold needs a nonempty baseline block");
    }
  }
  if (jobs == 0) throw ConfigError("jobs must be positive");
}

FormulaSpec ExperimentConfig::formula(GateKind top) const {
  return FormulaSpec(and_block, or_block, xor_block, baseline_len, top);
}

Domain ExperimentConfig::domain() const { return Domain(values, positives); }

ExperimentConfig preset_config(std::string_view preset) {
  const Preset p = make_preset(preset, GateKind::And);
  ExperimentConfig c;
  c.dataset_name = p.name;
  c.preset = p.name;
  c.and_block = p.spec.block(GateKind::And);
  c.or_block = p.spec.block(GateKind::Or);
  c.xor_block = p.spec.block(GateKind::Xor);
  c.baseline_len = p.spec.baseline_len();
  c.values = p.domain.values();
  c.positives = p.domain.positives();
  c.train_ratio = preset == "2inBinary" ? 0.9 : 0.8;
  c.methods = default_methods();
  if (preset == "3inBinary") c.hidden = {64};
  return c;
}

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get(const json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid value for '") + key + "': " + e.what());
  }
}

std::vector<Rational> rationals(const json& j, const char* where) {
  if (!j.is_array()) throw ConfigError(std::string(where) + " must be an array");
  std::vector<Rational> out;
  for (const auto& v : j) {
    if (v.is_string()) out.push_back(Rational::parse(v.get<std::string>()));
    else if (v.is_number_integer()) out.push_back(Rational(v.get<std::int64_t>()));
    else throw ConfigError(std::string(where) + " entries must be integers or rational strings such as \"-1/3\"");
  }
  return out;
}

BlockSpec block(const json& j, const char* name) {
  if (!j.contains(name)) return BlockSpec{0, 1};
  const auto& b = j.at(name);
  check_keys(b, {"stacks", "gate_len"}, std::string("blocks.") + name);
  return BlockSpec{get<std::size_t>(b, "stacks", 1), get<std::size_t>(b, "gate_len", 1)};
}

MethodEntry method_entry(const json& j) {
  MethodEntry e;
  if (j.is_string()) {
    e.name = j.get<std::string>();
  } else {
    check_keys(j, {"name", "steps", "epsilon", "repeats", "shap", "samples", "transform", "seed"}, "method");
    e.name = j.at("name").get<std::string>();
  }
  if (is_external_method(e.name)) {
    e.external = true;
    return e;
  }
  for (const auto& d : default_methods()) {
    if (d.name == e.name) e.spec = d.spec;
  }
  e.spec.kind = parse_method_kind(e.name);
  if (j.is_object()) {
    e.spec.ig_steps = get<std::size_t>(j, "steps", e.spec.ig_steps);
    e.spec.lrp_epsilon = get<double>(j, "epsilon", e.spec.lrp_epsilon);
    e.spec.permutation_repeats = get<std::size_t>(j, "repeats", e.spec.permutation_repeats);
    const auto shap = get<std::string>(j, "shap", "exact");
    if (shap != "exact" && shap != "sampled") throw ConfigError("shap must be 'exact' or 'sampled'");
    e.spec.shap_exact = shap == "exact";
    e.spec.shap_samples = get<std::size_t>(j, "samples", e.spec.shap_samples);
    e.spec.seed = get<std::uint64_t>(j, "seed", e.spec.seed);
    const auto tr = get<std::string>(j, "transform", "identity");
    if (tr != "identity" && tr != "abs") throw ConfigError("transform must be 'identity' or 'abs'");
    e.spec.transform = tr == "abs" ? ScoreTransform::Abs : ScoreTransform::Identity;
  }
  return e;
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"dataset", "top_levels", "split", "net", "train", "retrain", "forest", "methods", "thresholds",
                 "score_transform", "target", "only_100acc", "require_unique_rmin", "seed", "jobs", "out_dir",
                 "budgets"},
             "config");
  ExperimentConfig c;
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, {"name", "preset", "blocks", "domain", "sample_limit"}, "dataset");
    if (d.contains("preset")) {
      c = preset_config(d.at("preset").get<std::string>());
    } else {
      c.preset.clear();
      if (!d.contains("blocks") || !d.contains("domain")) {
        throw ConfigError("dataset needs either a preset or both blocks and domain");
      }
      const auto& b = d.at("blocks");
      check_keys(b, {"and", "or", "xor", "baseline"}, "dataset.blocks");
      c.and_block = block(b, "and");
      c.or_block = block(b, "or");
      c.xor_block = block(b, "xor");
      c.baseline_len = get<std::size_t>(b, "baseline", 0);
      const auto& dom = d.at("domain");
      check_keys(dom, {"values", "positives"}, "dataset.domain");
      c.values = rationals(dom.at("values"), "domain.values");
      c.positives = rationals(dom.at("positives"), "domain.positives");
      c.dataset_name = "custom";
      c.methods = default_methods();
    }
    c.dataset_name = get<std::string>(d, "name", c.dataset_name);
    c.sample_limit = get<std::size_t>(d, "sample_limit", 0);
  } else {
    c = preset_config("2inBinary");
  }
  if (j.contains("top_levels")) {
    c.top_levels.clear();
    for (const auto& t : j.at("top_levels")) c.top_levels.push_back(parse_gate_kind(t.get<std::string>()));
  }
  if (j.contains("split")) {
    const auto& s = j.at("split");
    check_keys(s, {"mode", "train_ratio"}, "split");
    const auto mode = get<std::string>(s, "mode", "split");
    if (mode != "split" && mode != "not_split") throw ConfigError("split.mode must be 'split' or 'not_split'");
    c.split_mode = mode == "split" ? SplitMode::Split : SplitMode::NotSplit;
    c.train_ratio = get<double>(s, "train_ratio", c.train_ratio);
  }
  if (j.contains("net")) {
    const auto& n = j.at("net");
    check_keys(n, {"hidden", "activation"}, "net");
    c.hidden = get<std::vector<std::size_t>>(n, "hidden", c.hidden);
    c.activation = parse_activation(get<std::string>(n, "activation", "relu"));
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    check_keys(t, {"optimizer", "learning_rate", "beta1", "beta2", "epsilon", "batch_size", "max_epochs",
                   "early_stop", "oversample", "folds"},
               "train");
    const auto opt = get<std::string>(t, "optimizer", "adam");
    if (opt != "adam" && opt != "sgd") throw ConfigError("train.optimizer must be 'adam' or 'sgd'");
    c.train.optimizer = opt == "adam" ? OptimizerKind::Adam : OptimizerKind::Sgd;
    c.train.learning_rate = get<double>(t, "learning_rate", c.train.learning_rate);
    c.train.beta1 = get<double>(t, "beta1", c.train.beta1);
    c.train.beta2 = get<double>(t, "beta2", c.train.beta2);
    c.train.epsilon = get<double>(t, "epsilon", c.train.epsilon);
    c.train.batch_size = get<std::size_t>(t, "batch_size", c.train.batch_size);
    c.train.max_epochs = get<std::size_t>(t, "max_epochs", c.train.max_epochs);
    c.train.early_stop = get<bool>(t, "early_stop", c.train.early_stop);
    c.train.oversample = get<bool>(t, "oversample", c.train.oversample);
    c.train.folds = get<std::size_t>(t, "folds", c.train.folds);
  }
  if (j.contains("retrain")) {
    const auto& r = j.at("retrain");
    check_keys(r, {"max_epochs"}, "retrain");
    c.retrain_max_epochs = get<std::size_t>(r, "max_epochs", c.retrain_max_epochs);
  }
  if (j.contains("forest")) {
    const auto& f = j.at("forest");
    check_keys(f, {"enabled", "n_trees", "max_depth", "features_per_split", "bootstrap"}, "forest");
    c.train_forest = get<bool>(f, "enabled", c.train_forest);
    c.forest.n_trees = get<std::size_t>(f, "n_trees", c.forest.n_trees);
    c.forest.max_depth = get<std::size_t>(f, "max_depth", c.forest.max_depth);
    c.forest.features_per_split = get<std::size_t>(f, "features_per_split", c.forest.features_per_split);
    c.forest.bootstrap = get<bool>(f, "bootstrap", c.forest.bootstrap);
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods")) c.methods.push_back(method_entry(m));
  }
  if (j.contains("thresholds")) {
    c.thresholds.clear();
    for (const auto& t : j.at("thresholds")) c.thresholds.push_back(ThresholdRule::parse(t.get<std::string>()));
  }
  const auto transform = get<std::string>(j, "score_transform", "identity");
  if (transform != "identity" && transform != "abs") throw ConfigError("score_transform must be 'identity' or 'abs'");
  c.score_transform = transform == "abs" ? ScoreTransform::Abs : ScoreTransform::Identity;
  const auto target = get<std::string>(j, "target", "predicted");
  if (target != "predicted" && target != "label") throw ConfigError("target must be 'predicted' or 'label'");
  c.target = target == "label" ? TargetMode::TrueLabel : TargetMode::Predicted;
  c.only_100acc = get<bool>(j, "only_100acc", c.only_100acc);
  c.require_unique_rmin = get<bool>(j, "require_unique_rmin", c.require_unique_rmin);
  c.seed = get<std::uint64_t>(j, "seed", c.seed);
  c.jobs = get<std::size_t>(j, "jobs", c.jobs);
  c.out_dir = get<std::string>(j, "out_dir", c.out_dir);
  if (j.contains("budgets")) {
    const auto& b = j.at("budgets");
    check_keys(b, {"enumeration", "oracle_max_inputs", "oracle_max_values"}, "budgets");
    c.enumeration_budget = get<std::size_t>(b, "enumeration", c.enumeration_budget);
    c.oracle_budget.max_inputs = get<std::size_t>(b, "oracle_max_inputs", c.oracle_budget.max_inputs);
    c.oracle_budget.max_values = get<std::size_t>(b, "oracle_max_values", c.oracle_budget.max_values);
  }
  for (auto& m : c.methods) {
    if (!m.external && m.spec.transform == ScoreTransform::Identity) m.spec.transform = c.score_transform;
    if (!m.external) m.spec.target = c.target;
  }
  c.validate();
  return c;
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json d;
  d["name"] = c.dataset_name;
  auto blk = [](const BlockSpec& b) {
    nlohmann::ordered_json o;
    o["stacks"] = b.stacks;
    o["gate_len"] = b.gate_len;
    return o;
  };
  nlohmann::ordered_json blocks;
  blocks["and"] = blk(c.and_block);
  blocks["or"] = blk(c.or_block);
  blocks["xor"] = blk(c.xor_block);
  blocks["baseline"] = c.baseline_len;
  d["blocks"] = blocks;
  std::vector<std::string> vals, pos;
  for (const auto& v : c.values) vals.push_back(v.to_string());
  for (const auto& v : c.positives) pos.push_back(v.to_string());
  d["domain"] = {{"values", vals}, {"positives", pos}};
  d["sample_limit"] = c.sample_limit;
  j["dataset"] = d;
  std::vector<std::string> tops;
  for (GateKind t : c.top_levels) tops.emplace_back(to_string(t));
  j["top_levels"] = tops;
  j["split"] = {{"mode", c.split_mode == SplitMode::Split ? "split" : "not_split"}, {"train_ratio", c.train_ratio}};
  j["net"] = {{"hidden", c.hidden}, {"activation", std::string(to_string(c.activation))}};
  nlohmann::ordered_json t;
  t["optimizer"] = c.train.optimizer == OptimizerKind::Adam ? "adam" : "sgd";
  t["learning_rate"] = c.train.learning_rate;
  t["beta1"] = c.train.beta1;
  t["beta2"] = c.train.beta2;
  t["epsilon"] = c.train.epsilon;
  t["batch_size"] = c.train.batch_size;
  t["max_epochs"] = c.train.max_epochs;
  t["early_stop"] = c.train.early_stop;
  t["oversample"] = c.train.oversample;
  t["folds"] = c.train.folds;
  j["train"] = t;
  j["retrain"] = {{"max_epochs", c.retrain_max_epochs}};
  nlohmann::ordered_json f;
  f["enabled"] = c.train_forest;
  f["n_trees"] = c.forest.n_trees;
  f["max_depth"] = c.forest.max_depth;
  f["features_per_split"] = c.forest.features_per_split;
  f["bootstrap"] = c.forest.bootstrap;
  j["forest"] = f;
  auto methods = nlohmann::ordered_json::array();
  for (const auto& m : c.methods) {
    nlohmann::ordered_json mj;
    mj["name"] = m.name;
    if (!m.external) {
      switch (m.spec.kind) {
        case MethodKind::IntegratedGradients: mj["steps"] = m.spec.ig_steps; break;
        case MethodKind::LrpEpsilon: mj["epsilon"] = m.spec.lrp_epsilon; break;
        case MethodKind::FeaturePermutation: mj["repeats"] = m.spec.permutation_repeats; break;
        case MethodKind::KernelShap:
          mj["shap"] = m.spec.shap_exact ? "exact" : "sampled";
          if (!m.spec.shap_exact) mj["samples"] = m.spec.shap_samples;
          break;
        default: break;
      }
      mj["transform"] = m.spec.transform == ScoreTransform::Abs ? "abs" : "identity";
    }
    methods.push_back(mj);
  }
  j["methods"] = methods;
  std::vector<std::string> th;
  for (const auto& r : c.thresholds) th.push_back(r.name());
  j["thresholds"] = th;
  j["score_transform"] = c.score_transform == ScoreTransform::Abs ? "abs" : "identity";
  j["target"] = c.target == TargetMode::TrueLabel ? "label" : "predicted";
  j["only_100acc"] = c.only_100acc;
  j["require_unique_rmin"] = c.require_unique_rmin;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["out_dir"] = c.out_dir;
  j["budgets"] = {{"enumeration", c.enumeration_budget},
                  {"oracle_max_inputs", c.oracle_budget.max_inputs},
                  {"oracle_max_values", c.oracle_budget.max_values}};
  return j;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& config) {
  auto j = config_to_json(config);
  j.erase("out_dir");
  j.erase("jobs");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace andor
