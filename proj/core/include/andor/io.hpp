#pragma once

// File formats: dataset CSV + JSON sidecar, score CSVs, mask CSVs.

#include <cstdint>
#include <string>
#include <vector>

#include "andor/logic.hpp"

namespace andor {

/// Provenance line embedded in every emitted artifact.
struct Provenance {
  std::string config_hash;
  std::uint64_t seed = 0;
};

std::string format_double(double v);

/// Header `input_0..input_{l-1},label`, one row per sample, numeric values.
std::string dataset_to_csv(const Dataset& dataset);
/// FormulaSpec, Domain and provenance.
std::string dataset_sidecar(const Dataset& dataset, const Provenance& prov);
/// Parses the sidecar, then maps CSV values back onto the domain. Throws
/// InputError for out-of-domain values or mislabeled rows.
Dataset dataset_from_files(const std::string& csv_text, const std::string& sidecar_text);

FormulaSpec formula_from_sidecar(const std::string& sidecar_text);
Domain domain_from_sidecar(const std::string& sidecar_text);

struct ScoreRow {
  std::size_t sample_id = 0;
  std::string method;
  std::vector<double> scores;
};

/// `sample_id,method,score_0..score_{l-1}`; lines starting with '#' are
/// comments.
std::string scores_to_csv(const std::vector<ScoreRow>& rows, std::size_t input_len, const Provenance* prov = nullptr);
std::vector<ScoreRow> scores_from_csv(const std::string& text);

struct MaskRow {
  std::size_t sample_id = 0;
  std::string method;
  std::string threshold;
  std::vector<bool> masked;
};

/// `sample_id,method,threshold,mask_0..mask_{l-1}` with 0/1 entries.
std::string masks_to_csv(const std::vector<MaskRow>& rows, std::size_t input_len, const Provenance* prov = nullptr);
std::vector<MaskRow> masks_from_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace andor
