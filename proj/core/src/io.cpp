#include "andor/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "andor/errors.hpp"

namespace andor {

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw InputError("cannot format number");
  return std::string(buf, ptr);
}

namespace {

double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("cannot parse number '" + s + "'");
  return v;
}

std::size_t parse_size(const std::string& s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("cannot parse integer '" + s + "'");
  return v;
}

void provenance_line(std::ostringstream& os, const Provenance* prov) {
  if (prov) os << "# config_hash=" << prov->config_hash << " master_seed=" << prov->seed << '\n';
}

// Non-empty, non-comment lines.
std::vector<std::string> data_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.push_back(line);
  }
  return out;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << content;
}

// ---- dataset -------------------------------------------------------------

std::string dataset_to_csv(const Dataset& dataset) {
  std::ostringstream os;
  const std::size_t l = dataset.spec.input_len();
  for (std::size_t i = 0; i < l; ++i) os << "input_" << i << ',';
  os << "label\n";
  for (const auto& s : dataset.samples) {
    for (ValueIndex v : s.inputs) os << format_double(dataset.domain.numeric(v)) << ',';
    os << s.label << '\n';
  }
  return os.str();
}

std::string dataset_sidecar(const Dataset& dataset, const Provenance& prov) {
  const FormulaSpec& spec = dataset.spec;
  nlohmann::ordered_json j;
  auto blk = [&](GateKind k) {
    nlohmann::ordered_json b;
    b["stacks"] = spec.block(k).stacks;
    b["gate_len"] = spec.block(k).gate_len;
    return b;
  };
  j["blocks"] = {{"and", blk(GateKind::And)}, {"or", blk(GateKind::Or)}, {"xor", blk(GateKind::Xor)},
                 {"baseline", spec.baseline_len()}};
  j["top_level"] = std::string(to_string(spec.top_level()));
  j["input_len"] = spec.input_len();
  std::vector<std::string> values, positives;
  for (const auto& v : dataset.domain.values()) values.push_back(v.to_string());
  for (const auto& v : dataset.domain.positives()) positives.push_back(v.to_string());
  j["domain"] = {{"values", values}, {"positives", positives}};
  auto gates = nlohmann::ordered_json::array();
  for (const Gate& g : spec.gates()) {
    nlohmann::ordered_json gj;
    gj["kind"] = std::string(to_string(g.kind));
    gj["begin"] = g.begin;
    gj["end"] = g.end;
    gates.push_back(gj);
  }
  j["gates"] = gates;
  j["samples"] = dataset.size();
  j["config_hash"] = prov.config_hash;
  j["master_seed"] = prov.seed;
  return j.dump(2) + "\n";
}

namespace {

template <typename Fn>
auto guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed dataset sidecar: ") + e.what());
  }
}

}  // namespace

FormulaSpec formula_from_sidecar(const std::string& sidecar_text) {
  return guarded([&] {
    const auto j = nlohmann::json::parse(sidecar_text);
    const auto& b = j.at("blocks");
    auto blk = [&](const char* name) {
      return BlockSpec{b.at(name).at("stacks").get<std::size_t>(), b.at(name).at("gate_len").get<std::size_t>()};
    };
    return FormulaSpec(blk("and"), blk("or"), blk("xor"), b.at("baseline").get<std::size_t>(),
                       parse_gate_kind(j.at("top_level").get<std::string>()));
  });
}

Domain domain_from_sidecar(const std::string& sidecar_text) {
  return guarded([&] {
    const auto j = nlohmann::json::parse(sidecar_text);
    std::vector<Rational> values, positives;
    for (const auto& v : j.at("domain").at("values")) values.push_back(Rational::parse(v.get<std::string>()));
    for (const auto& v : j.at("domain").at("positives")) positives.push_back(Rational::parse(v.get<std::string>()));
    return Domain(std::move(values), positives);
  });
}

Dataset dataset_from_files(const std::string& csv_text, const std::string& sidecar_text) {
  Dataset ds{formula_from_sidecar(sidecar_text), domain_from_sidecar(sidecar_text), {}};
  const auto lines = data_lines(csv_text);
  if (lines.empty()) throw InputError("dataset CSV has no header");
  const std::size_t l = ds.spec.input_len();
  if (split_csv_line(lines.front()).size() != l + 1) throw InputError("dataset CSV header does not match the formula");
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != l + 1) throw InputError("dataset CSV row " + std::to_string(r) + " has the wrong width");
    Sample s;
    for (std::size_t i = 0; i < l; ++i) {
      auto idx = ds.domain.index_of_numeric(parse_double(cells[i]));
      if (!idx) throw InputError("value '" + cells[i] + "' in row " + std::to_string(r) + " is outside the domain");
      s.inputs.push_back(*idx);
    }
    s.label = static_cast<int>(parse_size(cells[l]));
    if (s.label != eval_sample(ds.spec, ds.domain, s.inputs)) {
      throw InputError("row " + std::to_string(r) + " label disagrees with the formula");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

// ---- scores and masks ----------------------------------------------------

std::string scores_to_csv(const std::vector<ScoreRow>& rows, std::size_t input_len, const Provenance* prov) {
  std::ostringstream os;
  provenance_line(os, prov);
  os << "sample_id,method";
  for (std::size_t i = 0; i < input_len; ++i) os << ",score_" << i;
  os << '\n';
  for (const auto& r : rows) {
    if (r.scores.size() != input_len) throw InputError("score row has the wrong length");
    os << r.sample_id << ',' << r.method;
    for (double s : r.scores) os << ',' << format_double(s);
    os << '\n';
  }
  return os.str();
}

std::vector<ScoreRow> scores_from_csv(const std::string& text) {
  const auto lines = data_lines(text);
  if (lines.empty()) throw InputError("score CSV has no header");
  const auto header = split_csv_line(lines.front());
  if (header.size() < 3 || header[0] != "sample_id" || header[1] != "method") {
    throw InputError("score CSV header must start with sample_id,method");
  }
  const std::size_t l = header.size() - 2;
  std::vector<ScoreRow> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != l + 2) throw InputError("score CSV row " + std::to_string(r) + " has the wrong width");
    ScoreRow row{parse_size(cells[0]), cells[1], {}};
    for (std::size_t i = 0; i < l; ++i) {
      row.scores.push_back(parse_double(cells[i + 2]));
      if (!std::isfinite(row.scores.back())) throw InputError("non-finite score in row " + std::to_string(r));
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string masks_to_csv(const std::vector<MaskRow>& rows, std::size_t input_len, const Provenance* prov) {
  std::ostringstream os;
  provenance_line(os, prov);
  os << "sample_id,method,threshold";
  for (std::size_t i = 0; i < input_len; ++i) os << ",mask_" << i;
  os << '\n';
  for (const auto& r : rows) {
    os << r.sample_id << ',' << r.method << ',' << r.threshold;
    for (bool m : r.masked) os << ',' << (m ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

std::vector<MaskRow> masks_from_csv(const std::string& text) {
  const auto lines = data_lines(text);
  if (lines.empty()) throw InputError("mask CSV has no header");
  const std::size_t l = split_csv_line(lines.front()).size() - 3;
  std::vector<MaskRow> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    if (cells.size() != l + 3) throw InputError("mask CSV row " + std::to_string(r) + " has the wrong width");
    MaskRow row{parse_size(cells[0]), cells[1], cells[2], {}};
    for (std::size_t i = 0; i < l; ++i) row.masked.push_back(cells[i + 3] == "1");
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace andor
