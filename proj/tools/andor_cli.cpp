// andor: dataset generation, oracle checks, single stages and full grids.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "andor/config.hpp"
#include "andor/errors.hpp"
#include "andor/io.hpp"
#include "andor/logic.hpp"
#include "andor/pipeline.hpp"
#include "andor/reasoning.hpp"
#include "andor/report.hpp"

namespace fs = std::filesystem;
using namespace andor;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> jobs;
  bool only_100acc = false;
  std::vector<std::string> tops;
  bool quiet = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
  app->add_option("--config", o.config_path, "Experiment config JSON")->check(CLI::ExistingFile);
  app->add_option("--preset", o.preset, "2inBinary, 2inQuaternary or 3inBinary");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--out", o.out, "Output directory");
  app->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_flag("--only-100acc", o.only_100acc, "Keep only base models at 100% split-test accuracy");
  app->add_option("--top", o.tops, "Restrict to these top levels (and, or, xor)");
  app->add_flag("--quiet", o.quiet, "No progress output");
}

ExperimentConfig resolve_config(const CommonOptions& o) {
  if (!o.config_path.empty() && !o.preset.empty()) throw ConfigError("--config and --preset are mutually exclusive");
  ExperimentConfig c = o.config_path.empty() ? preset_config(o.preset.empty() ? "2inBinary" : o.preset)
                                             : load_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.jobs) c.jobs = *o.jobs;
  if (o.only_100acc) c.only_100acc = true;
  if (!o.tops.empty()) {
    c.top_levels.clear();
    for (const auto& t : o.tops) c.top_levels.push_back(parse_gate_kind(t));
  }
  c.validate();
  return c;
}

Provenance provenance(const ExperimentConfig& c) { return {config_hash(c), c.seed}; }

std::string top_name(GateKind g) { return std::string(to_string(g)); }

fs::path stage_path(const ExperimentConfig& c, const std::string& sub, const std::string& name) {
  return fs::path(c.out_dir) / sub / name;
}

std::string fold_tag(GateKind top, std::size_t k) { return top_name(top) + "_fold" + std::to_string(k); }

void note(const CommonOptions& o, const std::string& msg) {
  if (!o.quiet) std::cerr << msg << '\n';
}

// Header line shared by the per-stage CSVs.
std::string head(const ExperimentConfig& c) {
  return "# config_hash=" + config_hash(c) + " master_seed=" + std::to_string(c.seed) + "\n";
}

// ---- generate / oracle ---------------------------------------------------

int cmd_generate(const CommonOptions& o) {
  const auto c = resolve_config(o);
  for (GateKind top : c.top_levels) {
    const Dataset ds = build_dataset(c, top);
    write_file(stage_path(c, "data", top_name(top) + ".csv").string(), dataset_to_csv(ds));
    write_file(stage_path(c, "data", top_name(top) + ".json").string(), dataset_sidecar(ds, provenance(c)));
    std::cout << c.dataset_name << ' ' << top_name(top) << ": " << ds.size() << " samples, "
              << ds.count_label(1) << " positive\n";
  }
  return 0;
}

int cmd_oracle(const CommonOptions& o, bool verify, std::size_t verify_limit) {
  const auto c = resolve_config(o);
  std::size_t total = 0, matches = 0;
  for (GateKind top : c.top_levels) {
    const Dataset ds = build_dataset(c, top);
    const auto sets = structural_r_min_all(ds);
    write_file(stage_path(c, "reasoning", top_name(top) + ".jsonl").string(), reasoning_to_jsonl(sets));
    if (!verify) {
      std::cout << top_name(top) << ": " << sets.size() << " reasoning records\n";
      continue;
    }
    std::vector<std::size_t> ids(ds.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    if (verify_limit > 0 && verify_limit < ids.size()) {
      std::mt19937_64 rng(mix_seed(c.seed, 0x0AC1E));
      std::shuffle(ids.begin(), ids.end(), rng);
      ids.resize(verify_limit);
      std::sort(ids.begin(), ids.end());
    }
    std::size_t ok = 0;
    for (std::size_t id : ids) {
      const auto brute = brute_force_r_min(ds.spec, ds.domain, ds.samples[id], c.oracle_budget);
      if (brute.r_min == sets[id].r_min) {
        ++ok;
      } else {
        std::cerr << "mismatch: " << top_name(top) << " sample " << id << '\n';
      }
    }
    std::cout << top_name(top) << ": " << ok << '/' << ids.size() << " structural-vs-brute-force matches\n";
    total += ids.size();
    matches += ok;
  }
  if (verify) {
    std::cout << "total: " << matches << '/' << total << " matches\n";
    if (matches != total) {
      std::cerr << R"({"error":"oracle_mismatch","mismatches":)" << (total - matches) << "}\n";
      return 6;
    }
  }
  return 0;
}

// ---- single stages -------------------------------------------------------

std::vector<std::size_t> method_indices(const ExperimentConfig& c, const std::vector<std::string>& names) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.methods.size(); ++i) {
    if (c.methods[i].external) continue;
    if (names.empty() || std::find(names.begin(), names.end(), c.methods[i].name) != names.end()) out.push_back(i);
  }
  for (const auto& n : names) {
    if (std::none_of(c.methods.begin(), c.methods.end(), [&](const MethodEntry& m) { return m.name == n; })) {
      throw ConfigError("method '" + n + "' is not in the configuration");
    }
  }
  return out;
}

FoldModel load_base(const ExperimentConfig& c, const TopSetup& setup, std::size_t k) {
  const auto path = stage_path(c, "models", fold_tag(setup.top, k) + ".json");
  return restore_base_model(setup, k, model_from_json(read_file(path.string())));
}

// Scores by dataset id from a stage score file.
std::vector<std::vector<double>> load_scores(const ExperimentConfig& c, const TopSetup& setup, std::size_t k,
                                             const std::string& method) {
  const auto rows = scores_from_csv(read_file(stage_path(c, "scores", fold_tag(setup.top, k) + "_" + method + ".csv").string()));
  std::map<std::size_t, std::vector<double>> given;
  for (const auto& r : rows) given[r.sample_id] = r.scores;
  return external_score_table(setup, given);
}

// Masked samples by dataset id for threshold `ti`, from a stage mask file.
std::vector<MaskedSample> load_masks(const ExperimentConfig& c, const TopSetup& setup, std::size_t k,
                                     const std::string& method, std::size_t ti) {
  const auto rows = masks_from_csv(read_file(stage_path(c, "masks", fold_tag(setup.top, k) + "_" + method + ".csv").string()));
  const std::string tname = c.thresholds[ti].name();
  const Dataset& ds = setup.dataset;
  std::vector<MaskedSample> masked(ds.size());
  std::size_t found = 0;
  for (const auto& r : rows) {
    if (r.threshold != tname) continue;
    if (r.sample_id >= ds.size() || r.masked.size() != ds.spec.input_len()) throw InputError("mask row out of range");
    MaskPlan plan;
    plan.masked = r.masked;
    masked[r.sample_id] = apply_mask(ds.samples[r.sample_id], plan);
    ++found;
  }
  if (found != setup.attributed.size()) throw InputError("mask file does not cover every attributed sample");
  return masked;
}

int cmd_train(const CommonOptions& o) {
  const auto c = resolve_config(o);
  RunResult summary{config_hash(c), c.seed, {}, {}};
  for (std::size_t t = 0; t < c.top_levels.size(); ++t) {
    const TopSetup setup = prepare_top(c, t);
    for (std::size_t k = 0; k < c.train.folds; ++k) {
      const auto start = std::chrono::steady_clock::now();
      const FoldModel fm = train_base_model(c, setup, k);
      write_file(stage_path(c, "models", fold_tag(setup.top, k) + ".json").string(), model_to_json(fm.model));
      write_file(stage_path(c, "models", fold_tag(setup.top, k) + "_log.csv").string(),
                 head(c) + training_log_csv(fm.fit));
      BaseModelResult b{c.dataset_name, setup.top, k, fm.train_accuracy, fm.validation_accuracy, fm.test_accuracy,
                        fm.fit.epochs, {}, {}};
      if (c.train_forest) b.forest_importances = train_comparison_forest(c, setup, fm);
      summary.base_models.push_back(b);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << top_name(setup.top) << " fold " << k << ": test acc " << fm.test_accuracy << ", epochs "
                << fm.fit.epochs << ", " << secs << " s\n";
    }
  }
  write_file((fs::path(c.out_dir) / "base_models.csv").string(), base_models_csv(summary));
  write_file((fs::path(c.out_dir) / figure_file_names()[0]).string(), figure_csvs(summary).at(figure_file_names()[0]));
  return 0;
}

int cmd_attribute(const CommonOptions& o, const std::vector<std::string>& methods) {
  const auto c = resolve_config(o);
  const auto ms = method_indices(c, methods);
  const Provenance prov = provenance(c);
  for (std::size_t t = 0; t < c.top_levels.size(); ++t) {
    const TopSetup setup = prepare_top(c, t);
    for (std::size_t k = 0; k < c.train.folds; ++k) {
      const FoldModel base = load_base(c, setup, k);
      for (std::size_t mi : ms) {
        const auto scores = attribute_setup(c, setup, base.model, k, mi);
        std::vector<ScoreRow> rows;
        for (std::size_t id : setup.attributed) rows.push_back({id, c.methods[mi].name, scores[id]});
        write_file(stage_path(c, "scores", fold_tag(setup.top, k) + "_" + c.methods[mi].name + ".csv").string(),
                   scores_to_csv(rows, setup.dataset.spec.input_len(), &prov));
        note(o, top_name(setup.top) + " fold " + std::to_string(k) + ": " + c.methods[mi].name);
      }
    }
  }
  return 0;
}

int cmd_mask(const CommonOptions& o, const std::vector<std::string>& methods) {
  const auto c = resolve_config(o);
  const auto ms = method_indices(c, methods);
  const Provenance prov = provenance(c);
  for (std::size_t t = 0; t < c.top_levels.size(); ++t) {
    const TopSetup setup = prepare_top(c, t);
    for (std::size_t k = 0; k < c.train.folds; ++k) {
      for (std::size_t mi : ms) {
        const std::string& name = c.methods[mi].name;
        const auto scores = load_scores(c, setup, k, name);
        std::vector<MaskRow> rows;
        for (std::size_t ti = 0; ti < c.thresholds.size(); ++ti) {
          for (std::size_t id : setup.attributed) {
            const MaskPlan plan = compute_mask(scores[id], c.thresholds[ti], setup.dataset.spec);
            rows.push_back({id, name, c.thresholds[ti].name(), plan.masked});
          }
        }
        write_file(stage_path(c, "masks", fold_tag(setup.top, k) + "_" + name + ".csv").string(),
                   masks_to_csv(rows, setup.dataset.spec.input_len(), &prov));
      }
    }
  }
  std::cout << "masks written to " << (fs::path(c.out_dir) / "masks").string() << '\n';
  return 0;
}

int cmd_retrain(const CommonOptions& o, const std::vector<std::string>& methods) {
  const auto c = resolve_config(o);
  const auto ms = method_indices(c, methods);
  for (std::size_t t = 0; t < c.top_levels.size(); ++t) {
    const TopSetup setup = prepare_top(c, t);
    for (std::size_t k = 0; k < c.train.folds; ++k) {
      const FoldModel base = load_base(c, setup, k);
      for (std::size_t mi : ms) {
        const std::string& name = c.methods[mi].name;
        std::ostringstream os;
        os << head(c) << "sample_id,threshold,base_prediction,retrained_prediction\n";
        for (std::size_t ti = 0; ti < c.thresholds.size(); ++ti) {
          const auto masked = load_masks(c, setup, k, name, ti);
          const RetrainResult r = retrain_setup(c, setup, base, masked, mi, ti);
          for (std::size_t i = 0; i < setup.split.test.size(); ++i) {
            const std::size_t id = setup.split.test[i];
            os << id << ',' << c.thresholds[ti].name() << ','
               << base.model.predict(to_numeric(setup.dataset.domain, setup.dataset.samples[id].inputs)) << ','
               << r.test_predictions[i] << '\n';
          }
          note(o, top_name(setup.top) + " fold " + std::to_string(k) + " " + name + " " + c.thresholds[ti].name() +
                      ": retrained test acc " + format_double(r.test_accuracy));
        }
        write_file(stage_path(c, "retrain", fold_tag(setup.top, k) + "_" + name + ".csv").string(), os.str());
      }
    }
  }
  return 0;
}

int cmd_evaluate(const CommonOptions& o, const std::vector<std::string>& methods) {
  const auto c = resolve_config(o);
  const auto ms = method_indices(c, methods);
  RunResult run{config_hash(c), c.seed, {}, {}};
  for (std::size_t t = 0; t < c.top_levels.size(); ++t) {
    const TopSetup setup = prepare_top(c, t);
    for (std::size_t k = 0; k < c.train.folds; ++k) {
      const FoldModel base = load_base(c, setup, k);
      run.base_models.push_back({c.dataset_name, setup.top, k, base.train_accuracy, base.validation_accuracy,
                                 base.test_accuracy, 0, {}, {}});
      for (std::size_t mi : ms) {
        const std::string& name = c.methods[mi].name;
        const auto scores = load_scores(c, setup, k, name);
        // Retrained predictions per threshold, in test order.
        std::map<std::string, std::map<std::size_t, int>> preds;
        {
          const auto lines = read_file(stage_path(c, "retrain", fold_tag(setup.top, k) + "_" + name + ".csv").string());
          std::istringstream is(lines);
          std::string line;
          bool header = true;
          while (std::getline(is, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (header) {
              header = false;
              continue;
            }
            const auto cells = split_csv_line(line);
            if (cells.size() != 4) throw InputError("malformed retrain row");
            preds[cells[1]][std::stoul(cells[0])] = std::stoi(cells[3]);
          }
        }
        for (std::size_t ti = 0; ti < c.thresholds.size(); ++ti) {
          CellResult cell;
          cell.dataset = c.dataset_name;
          cell.top_level = setup.top;
          cell.split = c.split_mode;
          cell.fold = k;
          cell.method = name;
          cell.threshold = c.thresholds[ti].name();
          cell.base_test_accuracy = base.test_accuracy;
          cell.evaluated_samples = setup.split.test.size();
          if (c.only_100acc && base.test_accuracy < 1.0) {
            cell.status = CellStatus::Filtered;
            cell.error = "base model below 100% test accuracy";
          } else {
            const auto masked = load_masks(c, setup, k, name, ti);
            std::vector<int> retrained;
            const auto& by_id = preds.at(cell.threshold);
            for (std::size_t id : setup.split.test) retrained.push_back(by_id.at(id));
            cell.metrics = evaluate_setup(c, setup, base.model, scores, masked, retrained);
          }
          run.cells.push_back(std::move(cell));
        }
      }
    }
  }
  write_run_artifacts(c.out_dir, run, c);
  std::cout << run.cells.size() << " cells evaluated into " << c.out_dir << '\n';
  return 0;
}

// ---- grid ----------------------------------------------------------------

int finish_run(const ExperimentConfig& c, const RunResult& run) {
  write_run_artifacts(c.out_dir, run, c);
  const std::size_t failed = run.count(CellStatus::Failed);
  std::cout << "cells: " << run.cells.size() << " ok: " << run.count(CellStatus::Ok)
            << " filtered: " << run.count(CellStatus::Filtered) << " failed: " << failed << '\n';
  std::cout << "artifacts: " << c.out_dir << '\n';
  if (failed > 0) {
    nlohmann::ordered_json err;
    err["error"] = "partial_grid_failure";
    err["failed_cells"] = failed;
    std::map<std::string, std::size_t> reasons;
    for (const auto& cell : run.cells) {
      if (cell.status == CellStatus::Failed) ++reasons[cell.error];
    }
    err["reasons"] = reasons;
    std::cerr << err.dump() << '\n';
    return 7;
  }
  return 0;
}

ProgressFn progress_printer(const CommonOptions& o, std::size_t total) {
  if (o.quiet) return {};
  auto done = std::make_shared<std::size_t>(0);
  return [done, total](const CellResult& cell) {
    ++*done;
    std::cerr << '[' << *done << '/' << total << "] " << to_string(cell.top_level) << " fold " << cell.fold << ' '
              << cell.method << ' ' << cell.threshold << ": " << to_string(cell.status) << '\n';
  };
}

int cmd_run(const CommonOptions& o) {
  const auto c = resolve_config(o);
  const std::size_t total = c.top_levels.size() * c.train.folds * c.methods.size() * c.thresholds.size();
  const RunResult run = run_experiment(c, progress_printer(o, total));
  return finish_run(c, run);
}

int cmd_ingest(const CommonOptions& o, const std::vector<std::string>& files) {
  auto c = resolve_config(o);
  ExternalScores external;
  std::vector<std::string> names;
  for (const auto& spec : files) {
    // Each entry is <top>=<file>.
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ConfigError("--scores expects <top>=<file>, got '" + spec + "'");
    const GateKind top = parse_gate_kind(spec.substr(0, eq));
    for (const auto& row : scores_from_csv(read_file(spec.substr(eq + 1)))) {
      external[{row.method, top}][row.sample_id] = row.scores;
      if (std::find(names.begin(), names.end(), row.method) == names.end()) names.push_back(row.method);
    }
  }
  if (names.empty()) throw InputError("no score rows ingested");
  c.methods.clear();
  for (const auto& n : names) {
    MethodEntry m;
    m.name = n;
    m.external = true;
    c.methods.push_back(m);
  }
  const std::size_t total = c.top_levels.size() * c.train.folds * c.methods.size() * c.thresholds.size();
  const RunResult run = run_experiment(c, progress_printer(o, total), &external);
  return finish_run(c, run);
}

int cmd_report(const std::string& dir, bool plot_script) {
  const RunResult run = run_from_json(nlohmann::json::parse(read_file((fs::path(dir) / "results.json").string())));
  write_figures(dir, run);
  for (const auto& n : figure_file_names()) std::cout << (fs::path(dir) / n).string() << '\n';
  if (plot_script) {
    write_file((fs::path(dir) / "plot_figures.py").string(),
               "import sys, pandas as pd, matplotlib.pyplot as plt\n"
               "d = sys.argv[1] if len(sys.argv) > 1 else '.'\n"
               "for name in ['fig4_nib', 'fig5_performance', 'fig6_full_dca', 'fig7_dca_summary']:\n"
               "    df = pd.read_csv(f'{d}/{name}.csv', comment='#')\n"
               "    df = df[df['class'] == 'all']\n"
               "    for metric, part in df.groupby('metric'):\n"
               "        pv = part.pivot_table(index='method', columns=['top_level', 'threshold'], values='mean')\n"
               "        ax = pv.plot.bar(figsize=(12, 4), title=f'{name}: {metric}')\n"
               "        ax.figure.tight_layout(); ax.figure.savefig(f'{d}/{name}_{metric}.png'); plt.close(ax.figure)\n");
    std::cout << (fs::path(dir) / "plot_figures.py").string() << '\n';
  }
  return 0;
}

int emit_error(const char* kind, const std::string& message, int code) {
  nlohmann::json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ANDOR attribution trust harness"};
  app.require_subcommand(1);

  CommonOptions o;
  auto* gen = app.add_subcommand("generate", "Write dataset CSV and JSON sidecar per top level");
  auto* orc = app.add_subcommand("oracle", "Write reasoning sets; optionally verify against brute force");
  auto* trn = app.add_subcommand("train", "Train base models for every fold");
  auto* att = app.add_subcommand("attribute", "Score inputs with the configured methods");
  auto* msk = app.add_subcommand("mask", "Apply thresholds to stored scores");
  auto* rtr = app.add_subcommand("retrain", "Retrain on stored masks");
  auto* evl = app.add_subcommand("evaluate", "Compute metrics from stored stages");
  auto* run = app.add_subcommand("run", "Full experiment grid");
  auto* ing = app.add_subcommand("ingest-scores", "Evaluate externally computed scores");
  auto* rep = app.add_subcommand("report", "Write figure-data CSVs from a finished run");
  for (auto* s : {gen, orc, trn, att, msk, rtr, evl, run, ing}) add_common(s, o);

  bool verify = false;
  std::size_t verify_limit = 0;
  orc->add_flag("--verify", verify, "Compare with the brute-force oracle");
  orc->add_option("--verify-limit", verify_limit, "Check a seeded random subset of this size per top level");

  std::vector<std::string> methods;
  for (auto* s : {att, msk, rtr, evl}) s->add_option("--method", methods, "Restrict to these methods");

  std::vector<std::string> score_files;
  ing->add_option("--scores", score_files, "<top>=<scores.csv>, repeatable")->required();

  std::string report_dir;
  bool plot_script = false;
  rep->add_option("--out", report_dir, "Run directory containing results.json")->required();
  rep->add_flag("--plot-script", plot_script, "Also write a matplotlib script");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return cmd_generate(o);
    if (*orc) return cmd_oracle(o, verify, verify_limit);
    if (*trn) return cmd_train(o);
    if (*att) return cmd_attribute(o, methods);
    if (*msk) return cmd_mask(o, methods);
    if (*rtr) return cmd_retrain(o, methods);
    if (*evl) return cmd_evaluate(o, methods);
    if (*run) return cmd_run(o);
    if (*ing) return cmd_ingest(o, score_files);
    if (*rep) return cmd_report(report_dir, plot_script);
  } catch (const ConfigError& e) {
    return emit_error("config", e.what(), 2);
  } catch (const InputError& e) {
    return emit_error("input", e.what(), 3);
  } catch (const BudgetError& e) {
    return emit_error("budget", e.what(), 4);
  } catch (const TrainingError& e) {
    return emit_error("training", e.what(), 5);
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), 1);
  }
  return 0;
}
