#pragma once

// Run artifacts: per-cell tables, figure-data CSVs and the JSON index.

#include <map>
#include <string>

#include <json.hpp>

#include "andor/config.hpp"
#include "andor/pipeline.hpp"

namespace andor {

nlohmann::ordered_json run_to_json(const RunResult& run);
RunResult run_from_json(const nlohmann::json& j);

/// One row per grid cell, every metric flattened to columns.
std::string cells_csv(const RunResult& run);
std::string base_models_csv(const RunResult& run);

/// Figure tables keyed by file name. Columns:
/// dataset,top_level,method,threshold,class,metric,mean,std,n
/// aggregated over folds of successful cells; std is the sample standard
/// deviation (0 for a single fold).
std::map<std::string, std::string> figure_csvs(const RunResult& run);

/// Names of the five figure files.
const std::vector<std::string>& figure_file_names();

/// Writes results.json, cells.csv, base_models.csv, the figure CSVs and
/// index.json into `dir`. Returns the index.
nlohmann::ordered_json write_run_artifacts(const std::string& dir, const RunResult& run,
                                           const ExperimentConfig& config);

/// Writes only the figure CSVs (used by `report` on an existing run).
void write_figures(const std::string& dir, const RunResult& run);

}  // namespace andor
