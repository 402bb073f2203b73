#include "andor/reasoning.hpp"

#include <algorithm>
#include <json.hpp>
#include <sstream>

#include "andor/errors.hpp"

namespace andor {

InputSet InputSet::range(std::size_t begin, std::size_t end) {
  InputSet s;
  for (std::size_t i = begin; i < end; ++i) s.insert(i);
  return s;
}

InputSet InputSet::of(std::initializer_list<std::size_t> indices) {
  InputSet s;
  for (std::size_t i : indices) s.insert(i);
  return s;
}

std::vector<std::size_t> InputSet::indices() const {
  std::vector<std::size_t> out;
  for (std::uint64_t b = bits_; b != 0; b &= b - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
  return out;
}

bool operator<(InputSet a, InputSet b) {
  std::uint64_t x = a.bits_, y = b.bits_;
  while (x != 0 && y != 0) {
    const int i = std::countr_zero(x), j = std::countr_zero(y);
    if (i != j) return i < j;
    x &= x - 1;
    y &= y - 1;
  }
  return x == 0 && y != 0;
}

// ---- brute force ---------------------------------------------------------

bool is_sufficient(const FormulaSpec& spec, const Domain& domain, const Sample& sample, InputSet subset) {
  const std::size_t l = spec.input_len();
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < l; ++i) {
    if (!subset.contains(i)) free.push_back(i);
  }
  std::vector<ValueIndex> completion = sample.inputs;
  for (std::size_t i : free) completion[i] = 0;
  const auto base = static_cast<ValueIndex>(domain.size());
  while (true) {
    if (eval_sample(spec, domain, completion) != sample.label) return false;
    std::size_t k = free.size();
    while (k > 0) {
      --k;
      if (++completion[free[k]] < base) break;
      completion[free[k]] = 0;
      if (k == 0) return true;
    }
    if (free.empty()) return true;
  }
}

ReasoningSets brute_force_r_min(const FormulaSpec& spec, const Domain& domain, const Sample& sample,
                                const OracleBudget& budget) {
  const std::size_t l = spec.input_len();
  if (l > budget.max_inputs || domain.size() > budget.max_values) {
    throw BudgetError("brute-force oracle refused: l=" + std::to_string(l) + ", |M|=" + std::to_string(domain.size()) +
                      " exceeds l<=" + std::to_string(budget.max_inputs) +
                      ", |M|<=" + std::to_string(budget.max_values));
  }
  ReasoningSets out;
  for (std::size_t k = 0; k <= l; ++k) {
    // Gosper's hack over all k-subsets of [0, l).
    if (k == 0) {
      if (is_sufficient(spec, domain, sample, InputSet{})) out.r_min.push_back(InputSet{});
    } else {
      const std::uint64_t limit = std::uint64_t{1} << l;
      for (std::uint64_t s = (std::uint64_t{1} << k) - 1; s < limit;) {
        if (is_sufficient(spec, domain, sample, InputSet(s))) out.r_min.push_back(InputSet(s));
        const std::uint64_t c = s & (~s + 1);
        const std::uint64_t r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
      }
    }
    if (!out.r_min.empty()) break;
  }
  std::sort(out.r_min.begin(), out.r_min.end());
  out.relevant = relevant_inputs(out);
  return out;
}

// ---- structural ----------------------------------------------------------

namespace {

struct GateCertificates {
  bool value = false;
  std::vector<InputSet> certs;  // all of equal size
};

GateCertificates gate_certificates(const Gate& g, const Domain& domain, const std::vector<ValueIndex>& inputs) {
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = g.begin; i < g.end; ++i) (domain.is_positive(inputs[i]) ? pos : neg).push_back(i);
  const InputSet all = InputSet::range(g.begin, g.end);
  GateCertificates out;
  out.value = eval_gate_count(g.kind, pos.size(), g.size());
  auto singletons = [&out](const std::vector<std::size_t>& idx) {
    for (std::size_t i : idx) out.certs.push_back(InputSet::of({i}));
  };
  switch (g.kind) {
    case GateKind::And:
      if (out.value) out.certs.push_back(all);
      else singletons(neg);
      break;
    case GateKind::Or:
      if (out.value) singletons(pos);
      else out.certs.push_back(all);
      break;
    case GateKind::Xor:
      if (out.value || pos.empty()) {
        out.certs.push_back(all);
      } else {
        for (std::size_t a = 0; a < pos.size(); ++a) {
          for (std::size_t b = a + 1; b < pos.size(); ++b) out.certs.push_back(InputSet::of({pos[a], pos[b]}));
        }
      }
      break;
  }
  return out;
}

// Sets of gates whose known outputs determine the top-level output.
std::vector<std::vector<std::size_t>> top_certificates(GateKind top, const std::vector<bool>& values, bool label) {
  std::vector<std::size_t> all, trues, falses;
  for (std::size_t g = 0; g < values.size(); ++g) {
    all.push_back(g);
    (values[g] ? trues : falses).push_back(g);
  }
  std::vector<std::vector<std::size_t>> out;
  switch (top) {
    case GateKind::And:
      if (label) out.push_back(all);
      else for (std::size_t g : falses) out.push_back({g});
      break;
    case GateKind::Or:
      if (label) for (std::size_t g : trues) out.push_back({g});
      else out.push_back(all);
      break;
    case GateKind::Xor:
      if (label || trues.empty()) {
        out.push_back(all);
      } else {
        for (std::size_t a = 0; a < trues.size(); ++a) {
          for (std::size_t b = a + 1; b < trues.size(); ++b) out.push_back({trues[a], trues[b]});
        }
      }
      break;
  }
  return out;
}

}  // namespace

ReasoningSets structural_r_min(const FormulaSpec& spec, const Domain& domain, const Sample& sample) {
  if (spec.input_len() > 64) throw ConfigError("reasoning sets support at most 64 inputs");
  const auto& gates = spec.gates();
  std::vector<GateCertificates> per_gate;
  std::vector<bool> values;
  per_gate.reserve(gates.size());
  for (const Gate& g : gates) {
    per_gate.push_back(gate_certificates(g, domain, sample.inputs));
    values.push_back(per_gate.back().value);
  }
  const bool label = eval_gate_count(spec.top_level(), static_cast<std::size_t>(std::count(values.begin(), values.end(), true)),
                                     values.size());

  auto options = top_certificates(spec.top_level(), values, label);
  auto cost = [&per_gate](const std::vector<std::size_t>& gs) {
    std::size_t c = 0;
    for (std::size_t g : gs) c += per_gate[g].certs.front().size();
    return c;
  };
  std::size_t best = SIZE_MAX;
  for (const auto& opt : options) best = std::min(best, cost(opt));

  ReasoningSets out;
  for (const auto& opt : options) {
    if (cost(opt) != best) continue;
    std::vector<InputSet> partial{InputSet{}};
    for (std::size_t g : opt) {
      std::vector<InputSet> next;
      next.reserve(partial.size() * per_gate[g].certs.size());
      for (InputSet p : partial) {
        for (InputSet c : per_gate[g].certs) next.push_back(p | c);
      }
      partial = std::move(next);
    }
    out.r_min.insert(out.r_min.end(), partial.begin(), partial.end());
  }
  std::sort(out.r_min.begin(), out.r_min.end());
  out.r_min.erase(std::unique(out.r_min.begin(), out.r_min.end()), out.r_min.end());
  out.relevant = relevant_inputs(out);
  return out;
}

InputSet relevant_inputs(const ReasoningSets& sets) {
  InputSet u;
  for (InputSet s : sets.r_min) u = u | s;
  return u;
}

std::vector<double> oracle_scores(const FormulaSpec& spec, const ReasoningSets& sets) {
  std::vector<double> scores(spec.input_len(), 0.0);
  for (std::size_t i : sets.relevant.indices()) scores[i] = 0.5;
  if (!sets.r_min.empty()) {
    for (std::size_t i : sets.r_min.front().indices()) scores[i] = 1.0;
  }
  return scores;
}

std::vector<ReasoningSets> structural_r_min_all(const Dataset& dataset) {
  std::vector<ReasoningSets> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.push_back(structural_r_min(dataset.spec, dataset.domain, dataset.samples[i]));
    out.back().sample_id = i;
  }
  return out;
}

// ---- JSONL ---------------------------------------------------------------

std::string reasoning_to_jsonl(const std::vector<ReasoningSets>& sets) {
  std::ostringstream os;
  for (const auto& rs : sets) {
    nlohmann::ordered_json j;
    j["sample_id"] = rs.sample_id;
    auto r_min = nlohmann::json::array();
    for (InputSet s : rs.r_min) r_min.push_back(s.indices());
    j["r_min"] = std::move(r_min);
    j["relevant"] = rs.relevant.indices();
    os << j.dump() << '\n';
  }
  return os.str();
}

std::vector<ReasoningSets> reasoning_from_jsonl(const std::string& text) {
  std::vector<ReasoningSets> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ReasoningSets rs;
    auto to_set = [](const nlohmann::json& list) {
      InputSet set;
      for (std::size_t i : list.get<std::vector<std::size_t>>()) {
        if (i >= 64) throw InputError("reasoning index out of range");
        set.insert(i);
      }
      return set;
    };
    try {
      const auto j = nlohmann::json::parse(line);
      rs.sample_id = j.at("sample_id").get<std::size_t>();
      for (const auto& s : j.at("r_min")) rs.r_min.push_back(to_set(s));
      rs.relevant = to_set(j.at("relevant"));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("malformed reasoning record: ") + e.what());
    }
    out.push_back(std::move(rs));
  }
  return out;
}

}  // namespace andor
