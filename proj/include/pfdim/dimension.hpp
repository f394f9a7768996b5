#ifndef PFDIM_DIMENSION_HPP
#define PFDIM_DIMENSION_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfdim/bigint.hpp"
#include "pfdim/block_structure.hpp"
#include "pfdim/error.hpp"
#include "pfdim/families.hpp"
#include "pfdim/formula.hpp"

namespace pfdim {

// Finite-scale thresholds. The defaults are reported with every verdict.
struct DimensionThresholds {
  double tau = std::log(4.0);
  double gamma = std::log(2.0);
  // Position of the first sample used for the tail tests; default half.
  std::optional<std::size_t> burn_in;
  std::size_t min_samples = 4;

  std::size_t burn_in_for(std::size_t samples) const { return burn_in ? std::min(*burn_in, samples) : samples / 2; }
};

enum class DeltaClass { Equal, Less, Greater, Undetermined };

inline std::string to_string(DeltaClass c) {
  switch (c) {
    case DeltaClass::Equal: return "equal";
    case DeltaClass::Less: return "less";
    case DeltaClass::Greater: return "greater";
    case DeltaClass::Undetermined: return "undetermined";
  }
  return "undetermined";
}

inline DeltaClass flip(DeltaClass c) {
  if (c == DeltaClass::Less) return DeltaClass::Greater;
  if (c == DeltaClass::Greater) return DeltaClass::Less;
  return c;
}

struct DeltaEvidence {
  long long index = 0;
  double log_x = kNegInf;
  double log_y = kNegInf;
  double log_ratio = 0;
};

struct DeltaVerdict {
  DeltaClass classification = DeltaClass::Undetermined;
  std::vector<DeltaEvidence> evidence;
  double tau = 0;
  std::size_t burn_in = 0;
  std::size_t min_samples = 0;
};

namespace detail {

inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

// log|X| - log|Y| with the convention that two empty sets have ratio 0.
inline double log_ratio(double lx, double ly) {
  if (std::isinf(lx) && std::isinf(ly)) return 0;
  if (std::isinf(lx)) return kNegInf;
  if (std::isinf(ly)) return kPosInf;
  return lx - ly;
}

inline nlohmann::json log_json(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return v;
}

// Strictly increasing, except that a run of +inf counts as increasing.
inline bool rising(const std::vector<double>& r, std::size_t from) {
  for (std::size_t i = from + 1; i < r.size(); ++i) {
    if (std::isinf(r[i]) && r[i] > 0 && std::isinf(r[i - 1]) && r[i - 1] > 0) continue;
    if (!(r[i] > r[i - 1])) return false;
  }
  return true;
}

}  // namespace detail

// Pure function of the two log-count sequences and the thresholds.
inline DeltaVerdict delta_compare(const std::vector<std::pair<long long, double>>& x,
                                  const std::vector<std::pair<long long, double>>& y,
                                  const DimensionThresholds& th = {}) {
  if (x.size() != y.size()) fail(ErrorKind::IndexMismatch, "sequences have different lengths");
  DeltaVerdict v;
  v.tau = th.tau;
  v.min_samples = th.min_samples;
  v.burn_in = th.burn_in_for(x.size());
  std::vector<double> r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].first != y[i].first) {
      fail(ErrorKind::IndexMismatch, "index " + std::to_string(x[i].first) + " paired with " + std::to_string(y[i].first));
    }
    const double lr = detail::log_ratio(x[i].second, y[i].second);
    v.evidence.push_back({x[i].first, x[i].second, y[i].second, lr});
    r.push_back(lr);
  }
  if (r.size() < th.min_samples || v.burn_in >= r.size()) return v;
  double tail_max = 0;
  for (std::size_t i = v.burn_in; i < r.size(); ++i) tail_max = std::max(tail_max, std::fabs(r[i]));
  std::vector<double> neg(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) neg[i] = -r[i];
  if (tail_max <= th.tau) {
    v.classification = DeltaClass::Equal;
  } else if (r.back() > th.tau && detail::rising(r, v.burn_in)) {
    v.classification = DeltaClass::Greater;
  } else if (r.back() < -th.tau && detail::rising(neg, v.burn_in)) {
    v.classification = DeltaClass::Less;
  }
  return v;
}

inline std::vector<std::pair<long long, double>> log_counts(const CardinalitySequence& s) {
  std::vector<std::pair<long long, double>> out;
  for (const auto& [index, c] : s.entries) out.emplace_back(index, c.log_value);
  return out;
}

inline DeltaVerdict delta_compare(const CardinalitySequence& x, const CardinalitySequence& y,
                                  const DimensionThresholds& th = {}) {
  return delta_compare(log_counts(x), log_counts(y), th);
}

inline nlohmann::json thresholds_json(const DimensionThresholds& th, std::size_t burn_in) {
  return {{"tau", th.tau}, {"gamma", th.gamma}, {"burn_in", burn_in}, {"min_samples", th.min_samples}};
}

inline nlohmann::json to_json(const DeltaVerdict& v) {
  nlohmann::json ev = nlohmann::json::array();
  for (const auto& e : v.evidence) {
    ev.push_back({{"index", e.index},
                  {"log_x", detail::log_json(e.log_x)},
                  {"log_y", detail::log_json(e.log_y)},
                  {"log_ratio", detail::log_json(e.log_ratio)}});
  }
  return {{"classification", to_string(v.classification)},
          {"evidence", ev},
          {"thresholds", {{"tau", v.tau}, {"burn_in", v.burn_in}, {"min_samples", v.min_samples}}}};
}

namespace detail {

inline void rename_term(Term& t, const std::map<std::string, std::string>& names, const std::vector<std::string>& bound) {
  if (t.kind == Term::Kind::Var) {
    if (std::find(bound.begin(), bound.end(), t.name) != bound.end()) return;
    auto it = names.find(t.name);
    if (it != names.end()) t.name = it->second;
    return;
  }
  for (auto& a : t.args) rename_term(a, names, bound);
}

inline void rename_formula(Formula& f, const std::map<std::string, std::string>& names, std::vector<std::string>& bound) {
  for (auto& t : f.terms) rename_term(t, names, bound);
  if (f.is_quantifier()) bound.push_back(f.name);
  for (auto& c : f.children) rename_formula(c, names, bound);
  if (f.is_quantifier()) bound.pop_back();
}

}  // namespace detail

// Renames free occurrences of variables; bound occurrences are untouched.
inline Formula rename_free(Formula f, const std::map<std::string, std::string>& names) {
  std::vector<std::string> bound;
  detail::rename_formula(f, names, bound);
  return f;
}

// One conjunct phi(x, a_j): a formula with its parameter variables resolved by
// selectors.
struct ChainStep {
  Formula formula;
  SelectorSpec selectors;
};

struct ChainReport {
  std::vector<std::string> steps;
  std::vector<long long> indices;
  // counts[i][k]: size of the conjunction of steps 0..i at indices[k].
  std::vector<std::vector<Count>> counts;
  // verdicts[i] compares prefix i with prefix i+1.
  std::vector<DeltaVerdict> verdicts;
  std::size_t length = 0;
  // First prefix whose conjunction is empty at some index.
  std::optional<std::size_t> terminator;
  bool monotone = true;
  DimensionThresholds thresholds;
};

// Longest run of strictly dimension-dropping nested conjunctions. Parameter
// variables are renamed per step so distinct steps can take distinct values.
inline ChainReport chain_detect(const std::vector<ChainStep>& steps, const FamilyHandle& family,
                                const std::vector<long long>& indices, const std::vector<std::string>& counted,
                                const DimensionThresholds& th = {}, const EngineOptions& options = {}) {
  if (steps.empty()) fail(ErrorKind::InvalidArgument, "chain needs at least one step");
  if (counted.empty()) fail(ErrorKind::InvalidArgument, "chain needs counted variables");
  ChainReport report;
  report.indices = indices;
  report.thresholds = th;
  std::vector<std::string> counted_names;
  for (const auto& spec : counted) counted_names.push_back(spec.substr(0, spec.find(':')));
  std::optional<Formula> prefix;
  SelectorSpec prefix_selectors;
  for (std::size_t j = 0; j < steps.size(); ++j) {
    std::map<std::string, std::string> names;
    for (const auto& [var, sel] : steps[j].selectors) {
      if (std::find(counted_names.begin(), counted_names.end(), var) != counted_names.end()) {
        fail(ErrorKind::VariableOverlap, "variable '" + var + "' is both a parameter and counted");
      }
      names[var] = var + "_" + std::to_string(j + 1);
      prefix_selectors[names[var]] = sel;
    }
    const Formula step = rename_free(steps[j].formula, names);
    report.steps.push_back(render_formula(steps[j].formula) + (steps[j].selectors.empty() ? "" : " [" + describe(steps[j].selectors) + "]"));
    prefix = prefix ? Formula::conj(*prefix, step) : step;
    const auto seq = count_family(*prefix, family, indices, prefix_selectors, counted, options);
    std::vector<Count> row;
    for (const auto& e : seq.entries) row.push_back(e.second);
    if (!report.counts.empty()) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (row[k].value > report.counts.back()[k].value) report.monotone = false;
      }
    }
    report.counts.push_back(std::move(row));
  }

  auto sequence = [&](std::size_t i) {
    std::vector<std::pair<long long, double>> s;
    for (std::size_t k = 0; k < indices.size(); ++k) s.emplace_back(indices[k], report.counts[i][k].log_value);
    return s;
  };
  auto has_zero = [&](std::size_t i) {
    for (const auto& c : report.counts[i]) {
      if (c.is_zero()) return true;
    }
    return false;
  };
  if (has_zero(0)) {
    report.terminator = 0;
    return report;
  }
  report.length = 1;
  bool dropping = true;
  for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
    report.verdicts.push_back(delta_compare(sequence(i), sequence(i + 1), th));
    if (!dropping) continue;
    if (has_zero(i + 1)) {
      report.terminator = i + 1;
      dropping = false;
    } else if (report.verdicts.back().classification == DeltaClass::Greater) {
      ++report.length;
    } else {
      dropping = false;
    }
  }
  return report;
}

inline nlohmann::json to_json(const ChainReport& r) {
  nlohmann::json counts = nlohmann::json::array();
  for (const auto& row : r.counts) {
    nlohmann::json j = nlohmann::json::array();
    for (std::size_t k = 0; k < row.size(); ++k) {
      j.push_back({{"index", r.indices[k]}, {"count", to_string(row[k].value)}, {"log_count", detail::log_json(row[k].log_value)}});
    }
    counts.push_back(j);
  }
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) verdicts.push_back(to_json(v));
  nlohmann::json out = {{"steps", r.steps},
                        {"indices", r.indices},
                        {"counts", counts},
                        {"verdicts", verdicts},
                        {"length", r.length},
                        {"monotone", r.monotone},
                        {"thresholds", thresholds_json(r.thresholds, r.thresholds.burn_in_for(r.indices.size()))}};
  out["terminator"] = r.terminator ? nlohmann::json(*r.terminator) : nlohmann::json(nullptr);
  return out;
}

struct SpectrumIndex {
  long long index = 0;
  std::size_t parameter_classes = 0;
  // Sorted distinct counts and their logs.
  std::vector<BigInt> counts;
  std::vector<double> log_counts;
  // Each cluster lists positions into log_counts.
  std::vector<std::vector<std::size_t>> clusters;
};

struct SpectrumReport {
  std::vector<SpectrumIndex> per_index;
  std::vector<std::size_t> cluster_counts;
  bool unbounded = false;
  DimensionThresholds thresholds;
};

// Single-linkage clusters of sorted values: a new cluster starts wherever the
// gap exceeds gamma. The empty-set sentinel is its own cluster.
inline std::vector<std::vector<std::size_t>> cluster_logs(const std::vector<double>& sorted, double gamma) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const bool split = i == 0 || std::isinf(sorted[i - 1]) || sorted[i] - sorted[i - 1] > gamma;
    if (split) out.emplace_back();
    out.back().push_back(i);
  }
  return out;
}

struct SpectrumOptions {
  // Parameter variables; every other free variable is counted.
  std::vector<std::string> parameters;
  // When non-empty, parameters range over these selector assignments only.
  std::vector<SelectorSpec> selector_set;
  std::size_t max_parameter_classes = 200000;
};

// Distinct sizes of phi(M, b) as b ranges over the parameter space, up to the
// symmetries of the block structure.
inline SpectrumReport fmv_spectrum(const Formula& f, const FamilyHandle& family, const std::vector<long long>& indices,
                                   const SpectrumOptions& spec, const DimensionThresholds& th = {},
                                   const EngineOptions& options = {}) {
  SpectrumReport report;
  report.thresholds = th;
  const auto free = free_variables(f);
  std::vector<std::string> counted;
  for (const auto& v : free) {
    if (std::find(spec.parameters.begin(), spec.parameters.end(), v.name) == spec.parameters.end()) counted.push_back(v.name);
  }
  if (counted.empty()) fail(ErrorKind::InvalidArgument, "no counted variables left after removing parameters");
  for (long long index : indices) {
    const BlockStructure b = family.blocks(index);
    const Signature& sig = b.signature();
    std::vector<std::string> sorts;
    for (const auto& p : spec.parameters) {
      std::string sort = sig.sorts()[0];
      for (const auto& v : free) {
        if (v.name == p) sort = v.sort;
      }
      sorts.push_back(sort);
    }
    std::vector<BlockAssignment> assignments;
    if (!spec.selector_set.empty()) {
      for (const auto& sel : spec.selector_set) {
        BlockAssignment a;
        for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
          auto it = sel.find(spec.parameters[i]);
          if (it == sel.end()) fail(ErrorKind::MissingAssignment, "selector set misses parameter '" + spec.parameters[i] + "'");
          a[spec.parameters[i]] = {sorts[i], family.select(it->second, index)};
        }
        assignments.push_back(std::move(a));
      }
    } else {
      std::vector<SortId> ids;
      for (const auto& s : sorts) ids.push_back(*sig.find_sort(s));
      const auto classes = block_parameter_classes(b, ids);
      if (classes.size() > spec.max_parameter_classes) {
        fail(ErrorKind::BudgetExceeded, "parameter enumeration needs " + std::to_string(classes.size()) + " classes at index " +
                                            std::to_string(index));
      }
      for (const auto& c : classes) {
        BlockAssignment a;
        for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
          const bool occurs = std::any_of(free.begin(), free.end(), [&](const FreeVariable& v) { return v.name == spec.parameters[i]; });
          if (occurs) a[spec.parameters[i]] = {sorts[i], c.elements[i]};
        }
        assignments.push_back(std::move(a));
      }
    }

    std::vector<BigInt> values(assignments.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    EngineOptions inner = options;
    inner.workers = 1;
    auto work = [&] {
      try {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= assignments.size()) break;
          values[i] = block_count(f, b, assignments[i], counted, inner).value;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(assignments.size());
      }
    };
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, options.workers), std::max<std::size_t>(1, assignments.size())));
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work);
    for (auto& t : threads) t.join();
    if (error) std::rethrow_exception(error);

    SpectrumIndex si;
    si.index = index;
    si.parameter_classes = assignments.size();
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    si.counts = values;
    for (const auto& v : values) si.log_counts.push_back(log_of(v));
    si.clusters = cluster_logs(si.log_counts, th.gamma);
    report.cluster_counts.push_back(si.clusters.size());
    report.per_index.push_back(std::move(si));
  }
  report.unbounded = report.cluster_counts.size() >= 2;
  for (std::size_t i = 1; i < report.cluster_counts.size(); ++i) {
    report.unbounded = report.unbounded && report.cluster_counts[i] > report.cluster_counts[i - 1];
  }
  return report;
}

inline nlohmann::json to_json(const SpectrumReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& si : r.per_index) {
    nlohmann::json counts = nlohmann::json::array();
    nlohmann::json logs = nlohmann::json::array();
    for (std::size_t i = 0; i < si.counts.size(); ++i) {
      counts.push_back(to_string(si.counts[i]));
      logs.push_back(detail::log_json(si.log_counts[i]));
    }
    per.push_back({{"index", si.index},
                   {"parameter_classes", si.parameter_classes},
                   {"counts", counts},
                   {"log_counts", logs},
                   {"clusters", si.clusters},
                   {"cluster_count", si.clusters.size()}});
  }
  return {{"per_index", per},
          {"cluster_counts", r.cluster_counts},
          {"unbounded", r.unbounded},
          {"thresholds", {{"gamma", r.thresholds.gamma}}}};
}

inline nlohmann::json to_json(const CardinalitySequence& s) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [index, c] : s.entries) {
    entries.push_back({{"index", index}, {"count", to_string(c.value)}, {"log_count", detail::log_json(c.log_value)}});
  }
  return {{"family", s.family_id}, {"formula", s.formula}, {"selector", s.selector}, {"entries", entries}};
}

// Plot-ready table: one row per (sequence, index).
inline std::string to_csv(const std::vector<CardinalitySequence>& seqs) {
  std::ostringstream out;
  out << "label,index,count,log_count\n";
  out.precision(17);
  for (const auto& s : seqs) {
    std::string label = s.formula + (s.selector.empty() ? "" : " [" + s.selector + "]");
    std::string quoted = "\"";
    for (char c : label) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    quoted += "\"";
    for (const auto& [index, c] : s.entries) {
      out << quoted << ',' << index << ',' << to_string(c.value) << ',';
      if (std::isinf(c.log_value)) {
        out << "-inf";
      } else {
        out << c.log_value;
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace pfdim

#endif  // PFDIM_DIMENSION_HPP
