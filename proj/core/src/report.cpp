#include "andor/report.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "andor/errors.hpp"
#include "andor/io.hpp"

namespace andor {

namespace {

using ojson = nlohmann::ordered_json;

ojson opt_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::optional<double> opt_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ojson rate_json(const ClassRate& r) {
  ojson j;
  j["all"] = opt_json(r.all);
  j["class0"] = opt_json(r.class0);
  j["class1"] = opt_json(r.class1);
  return j;
}

ClassRate rate_from(const nlohmann::json& j) {
  return ClassRate{opt_from(j.at("all")), opt_from(j.at("class0")), opt_from(j.at("class1"))};
}

// Rate fields of MetricsReport in emission order.
struct RateField {
  const char* name;
  ClassRate MetricsReport::*member;
};
constexpr RateField kRateFields[] = {
    {"nib_strict", &MetricsReport::nib_strict},
    {"nib_coverage", &MetricsReport::nib_coverage},
    {"gib", &MetricsReport::gib},
    {"logical_accuracy", &MetricsReport::logical_accuracy},
    {"statistical_logical_accuracy", &MetricsReport::statistical_logical_accuracy},
    {"mask_fraction", &MetricsReport::mask_fraction},
    {"retrained_accuracy", &MetricsReport::retrained_accuracy},
};

SplitMode parse_split(const std::string& s) {
  if (s == "split") return SplitMode::Split;
  if (s == "not_split") return SplitMode::NotSplit;
  throw InputError("unknown split mode '" + s + "'");
}

const char* split_name(SplitMode m) { return m == SplitMode::Split ? "split" : "not_split"; }

CellStatus parse_status(const std::string& s) {
  if (s == "ok") return CellStatus::Ok;
  if (s == "filtered") return CellStatus::Filtered;
  if (s == "failed") return CellStatus::Failed;
  throw InputError("unknown cell status '" + s + "'");
}

std::string opt_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// Accumulates values per figure row key, preserving first-seen order.
class FigureTable {
 public:
  void add(const std::string& key, std::optional<double> v) {
    auto it = index_.find(key);
    if (it == index_.end()) {
      it = index_.emplace(key, rows_.size()).first;
      rows_.push_back({key, {}});
    }
    if (v) rows_[it->second].values.push_back(*v);
  }

  std::string csv() const {
    std::ostringstream os;
    os << "dataset,top_level,method,threshold,class,metric,mean,std,n\n";
    for (const auto& row : rows_) {
      os << row.key << ',';
      const auto& v = row.values;
      if (v.empty()) {
        os << ",,0\n";
        continue;
      }
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      const double sd = v.size() > 1 ? std::sqrt(var / static_cast<double>(v.size() - 1)) : 0.0;
      os << format_double(mean) << ',' << format_double(sd) << ',' << v.size() << '\n';
    }
    return os.str();
  }

 private:
  struct Row {
    std::string key;
    std::vector<double> values;
  };
  std::vector<Row> rows_;
  std::map<std::string, std::size_t> index_;
};

std::string row_key(const std::string& dataset, GateKind top, const std::string& method, const std::string& threshold,
                    const char* cls, const std::string& metric) {
  return dataset + ',' + std::string(to_string(top)) + ',' + method + ',' + threshold + ',' + cls + ',' + metric;
}

void add_rate(FigureTable& t, const CellResult& c, const char* metric, const ClassRate& r) {
  t.add(row_key(c.dataset, c.top_level, c.method, c.threshold, "all", metric), r.all);
  t.add(row_key(c.dataset, c.top_level, c.method, c.threshold, "0", metric), r.class0);
  t.add(row_key(c.dataset, c.top_level, c.method, c.threshold, "1", metric), r.class1);
}

void add_scalar(FigureTable& t, const CellResult& c, const std::string& metric, std::optional<double> v) {
  t.add(row_key(c.dataset, c.top_level, c.method, c.threshold, "all", metric), v);
}

}  // namespace

// ---- JSON round trip -----------------------------------------------------

ojson run_to_json(const RunResult& run) {
  ojson j;
  j["config_hash"] = run.config_hash;
  j["master_seed"] = run.seed;
  auto bases = ojson::array();
  for (const auto& b : run.base_models) {
    ojson bj;
    bj["dataset"] = b.dataset;
    bj["top_level"] = std::string(to_string(b.top_level));
    bj["fold"] = b.fold;
    bj["train_accuracy"] = b.train_accuracy;
    bj["validation_accuracy"] = b.validation_accuracy;
    bj["test_accuracy"] = b.test_accuracy;
    bj["epochs"] = b.epochs;
    bj["forest_importances"] = b.forest_importances;
    bj["error"] = b.error;
    bases.push_back(std::move(bj));
  }
  j["base_models"] = std::move(bases);
  auto cells = ojson::array();
  for (const auto& c : run.cells) {
    ojson cj;
    cj["dataset"] = c.dataset;
    cj["top_level"] = std::string(to_string(c.top_level));
    cj["split"] = split_name(c.split);
    cj["fold"] = c.fold;
    cj["method"] = c.method;
    cj["threshold"] = c.threshold;
    cj["status"] = std::string(to_string(c.status));
    cj["error"] = c.error;
    cj["base_test_accuracy"] = c.base_test_accuracy;
    cj["evaluated_samples"] = c.evaluated_samples;
    const MetricsReport& m = c.metrics;
    ojson mj;
    for (const auto& f : kRateFields) mj[f.name] = rate_json(m.*(f.member));
    mj["logical_acc_diff"] = m.logical_acc_diff;
    mj["statistical_logical_acc_diff"] = m.statistical_logical_acc_diff;
    mj["full_dca"] = {{"considered", m.full_dca.considered},
                      {"conflicting_samples", m.full_dca.conflicting_samples},
                      {"groups", m.full_dca.groups},
                      {"conflicting_groups", m.full_dca.conflicting_groups},
                      {"sample_weighted", opt_json(m.full_dca.sample_weighted)},
                      {"group_weighted", opt_json(m.full_dca.group_weighted)}};
    auto per_gate = ojson::array();
    for (const auto& g : m.minimal_dca.per_gate) per_gate.push_back(opt_json(g));
    mj["minimal_dca"] = {{"per_gate", per_gate},
                         {"keys", m.minimal_dca.keys},
                         {"conflicting_keys", m.minimal_dca.conflicting_keys},
                         {"aggregate", opt_json(m.minimal_dca.aggregate)}};
    cj["metrics"] = std::move(mj);
    cells.push_back(std::move(cj));
  }
  j["cells"] = std::move(cells);
  return j;
}

RunResult run_from_json(const nlohmann::json& j) {
  RunResult run;
  try {
    run.config_hash = j.at("config_hash").get<std::string>();
    run.seed = j.at("master_seed").get<std::uint64_t>();
    for (const auto& bj : j.at("base_models")) {
      BaseModelResult b;
      b.dataset = bj.at("dataset").get<std::string>();
      b.top_level = parse_gate_kind(bj.at("top_level").get<std::string>());
      b.fold = bj.at("fold").get<std::size_t>();
      b.train_accuracy = bj.at("train_accuracy").get<double>();
      b.validation_accuracy = bj.at("validation_accuracy").get<double>();
      b.test_accuracy = bj.at("test_accuracy").get<double>();
      b.epochs = bj.at("epochs").get<std::size_t>();
      b.forest_importances = bj.at("forest_importances").get<std::vector<double>>();
      b.error = bj.at("error").get<std::string>();
      run.base_models.push_back(std::move(b));
    }
    for (const auto& cj : j.at("cells")) {
      CellResult c;
      c.dataset = cj.at("dataset").get<std::string>();
      c.top_level = parse_gate_kind(cj.at("top_level").get<std::string>());
      c.split = parse_split(cj.at("split").get<std::string>());
      c.fold = cj.at("fold").get<std::size_t>();
      c.method = cj.at("method").get<std::string>();
      c.threshold = cj.at("threshold").get<std::string>();
      c.status = parse_status(cj.at("status").get<std::string>());
      c.error = cj.at("error").get<std::string>();
      c.base_test_accuracy = cj.at("base_test_accuracy").get<double>();
      c.evaluated_samples = cj.at("evaluated_samples").get<std::size_t>();
      const auto& mj = cj.at("metrics");
      MetricsReport& m = c.metrics;
      for (const auto& f : kRateFields) m.*(f.member) = rate_from(mj.at(f.name));
      m.logical_acc_diff = mj.at("logical_acc_diff").get<double>();
      m.statistical_logical_acc_diff = mj.at("statistical_logical_acc_diff").get<double>();
      const auto& fd = mj.at("full_dca");
      m.full_dca.considered = fd.at("considered").get<std::size_t>();
      m.full_dca.conflicting_samples = fd.at("conflicting_samples").get<std::size_t>();
      m.full_dca.groups = fd.at("groups").get<std::size_t>();
      m.full_dca.conflicting_groups = fd.at("conflicting_groups").get<std::size_t>();
      m.full_dca.sample_weighted = opt_from(fd.at("sample_weighted"));
      m.full_dca.group_weighted = opt_from(fd.at("group_weighted"));
      const auto& md = mj.at("minimal_dca");
      for (const auto& g : md.at("per_gate")) m.minimal_dca.per_gate.push_back(opt_from(g));
      m.minimal_dca.keys = md.at("keys").get<std::vector<std::size_t>>();
      m.minimal_dca.conflicting_keys = md.at("conflicting_keys").get<std::vector<std::size_t>>();
      m.minimal_dca.aggregate = opt_from(md.at("aggregate"));
      run.cells.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed results file: ") + e.what());
  }
  return run;
}

// ---- tables --------------------------------------------------------------

std::string cells_csv(const RunResult& run) {
  std::ostringstream os;
  os << "# config_hash=" << run.config_hash << " master_seed=" << run.seed << '\n';
  os << "dataset,top_level,split,fold,method,threshold,status,base_test_accuracy,evaluated_samples";
  for (const auto& f : kRateFields) os << ',' << f.name << "_all," << f.name << "_class0," << f.name << "_class1";
  os << ",logical_acc_diff,statistical_logical_acc_diff,full_dca_sample_weighted,full_dca_group_weighted"
        ",full_dca_considered,minimal_dca_aggregate,minimal_dca_per_gate,error\n";
  for (const auto& c : run.cells) {
    const MetricsReport& m = c.metrics;
    const bool ok = c.status == CellStatus::Ok;
    os << c.dataset << ',' << to_string(c.top_level) << ',' << split_name(c.split) << ',' << c.fold << ','
       << c.method << ',' << c.threshold << ',' << to_string(c.status) << ',' << format_double(c.base_test_accuracy)
       << ',' << c.evaluated_samples;
    for (const auto& f : kRateFields) {
      const ClassRate& r = m.*(f.member);
      os << ',' << opt_cell(r.all) << ',' << opt_cell(r.class0) << ',' << opt_cell(r.class1);
    }
    os << ',' << (ok ? format_double(m.logical_acc_diff) : "") << ','
       << (ok ? format_double(m.statistical_logical_acc_diff) : "") << ',' << opt_cell(m.full_dca.sample_weighted)
       << ',' << opt_cell(m.full_dca.group_weighted) << ',' << m.full_dca.considered << ','
       << opt_cell(m.minimal_dca.aggregate) << ',';
    for (std::size_t g = 0; g < m.minimal_dca.per_gate.size(); ++g) {
      if (g) os << ';';
      os << opt_cell(m.minimal_dca.per_gate[g]);
    }
    std::string err = c.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    os << ',' << err << '\n';
  }
  return os.str();
}

std::string base_models_csv(const RunResult& run) {
  std::ostringstream os;
  os << "# config_hash=" << run.config_hash << " master_seed=" << run.seed << '\n';
  os << "dataset,top_level,fold,train_accuracy,validation_accuracy,test_accuracy,epochs,error\n";
  for (const auto& b : run.base_models) {
    std::string err = b.error;
    for (char& ch : err) {
      if (ch == ',' || ch == '\n') ch = ';';
    }
    os << b.dataset << ',' << to_string(b.top_level) << ',' << b.fold << ',' << format_double(b.train_accuracy) << ','
       << format_double(b.validation_accuracy) << ',' << format_double(b.test_accuracy) << ',' << b.epochs << ','
       << err << '\n';
  }
  return os.str();
}

const std::vector<std::string>& figure_file_names() {
  static const std::vector<std::string> names{"fig3_forest_importance.csv", "fig4_nib.csv", "fig5_performance.csv",
                                              "fig6_full_dca.csv", "fig7_dca_summary.csv"};
  return names;
}

std::map<std::string, std::string> figure_csvs(const RunResult& run) {
  FigureTable fig3, fig4, fig5, fig6, fig7;
  for (const auto& b : run.base_models) {
    for (std::size_t i = 0; i < b.forest_importances.size(); ++i) {
      fig3.add(row_key(b.dataset, b.top_level, "random_forest", "none", "all", "input_" + std::to_string(i)),
               b.forest_importances[i]);
    }
  }
  for (const auto& c : run.cells) {
    if (c.status != CellStatus::Ok) continue;
    const MetricsReport& m = c.metrics;
    add_rate(fig4, c, "nib_coverage", m.nib_coverage);
    add_rate(fig4, c, "nib_strict", m.nib_strict);
    add_rate(fig4, c, "gib", m.gib);
    add_rate(fig5, c, "retrained_accuracy", m.retrained_accuracy);
    add_rate(fig5, c, "logical_accuracy", m.logical_accuracy);
    add_rate(fig5, c, "statistical_logical_accuracy", m.statistical_logical_accuracy);
    add_rate(fig5, c, "mask_fraction", m.mask_fraction);
    add_scalar(fig5, c, "logical_acc_diff", m.logical_acc_diff);
    add_scalar(fig5, c, "statistical_logical_acc_diff", m.statistical_logical_acc_diff);
    add_scalar(fig6, c, "full_dca", m.full_dca.sample_weighted);
    add_scalar(fig6, c, "full_dca_group_weighted", m.full_dca.group_weighted);
    add_scalar(fig7, c, "full_dca", m.full_dca.sample_weighted);
    add_scalar(fig7, c, "minimal_dca", m.minimal_dca.aggregate);
    for (std::size_t g = 0; g < m.minimal_dca.per_gate.size(); ++g) {
      add_scalar(fig7, c, "minimal_dca_gate_" + std::to_string(g), m.minimal_dca.per_gate[g]);
    }
  }
  const std::string head = "# config_hash=" + run.config_hash + " master_seed=" + std::to_string(run.seed) + "\n";
  const auto& names = figure_file_names();
  return {{names[0], head + fig3.csv()},
          {names[1], head + fig4.csv()},
          {names[2], head + fig5.csv()},
          {names[3], head + fig6.csv()},
          {names[4], head + fig7.csv()}};
}

void write_figures(const std::string& dir, const RunResult& run) {
  for (const auto& [name, text] : figure_csvs(run)) write_file((std::filesystem::path(dir) / name).string(), text);
}

ojson write_run_artifacts(const std::string& dir, const RunResult& run, const ExperimentConfig& config) {
  const std::filesystem::path root(dir);
  write_file((root / "results.json").string(), run_to_json(run).dump(1) + "\n");
  write_file((root / "cells.csv").string(), cells_csv(run));
  write_file((root / "base_models.csv").string(), base_models_csv(run));
  write_figures(dir, run);

  ojson index;
  index["config_hash"] = run.config_hash;
  index["master_seed"] = run.seed;
  index["dataset"] = config.dataset_name;
  // Location and parallelism are left out so identical runs give identical files.
  ojson cfg = config_to_json(config);
  cfg.erase("out_dir");
  cfg.erase("jobs");
  index["config"] = std::move(cfg);
  index["cells"] = {{"total", run.cells.size()},
                    {"ok", run.count(CellStatus::Ok)},
                    {"filtered", run.count(CellStatus::Filtered)},
                    {"failed", run.count(CellStatus::Failed)}};
  auto files = ojson::array({"results.json", "cells.csv", "base_models.csv"});
  for (const auto& n : figure_file_names()) files.push_back(n);
  index["files"] = files;
  write_file((root / "index.json").string(), index.dump(2) + "\n");
  return index;
}

}  // namespace andor
