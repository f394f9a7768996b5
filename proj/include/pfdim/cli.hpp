#ifndef PFDIM_CLI_HPP
#define PFDIM_CLI_HPP

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pfdim/abelian.hpp"
#include "pfdim/dimension.hpp"
#include "pfdim/engine.hpp"
#include "pfdim/error.hpp"
#include "pfdim/families.hpp"
#include "pfdim/groups.hpp"
#include "pfdim/measure.hpp"
#include "pfdim/parser.hpp"
#include "pfdim/structure_io.hpp"
#include "pfdim/vs_oracle.hpp"

namespace pfdim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitViolation = 2;

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  for (auto& s : split(text, sep)) {
    s = trim(s);
    if (!s.empty()) out.push_back(s);
  }
  return out;
}

inline std::pair<std::string, std::string> key_value(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) fail(ErrorKind::InvalidArgument, "expected NAME=VALUE, got '" + text + "'");
  return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

inline long long to_integer(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidArgument, what + " must be an integer, got '" + text + "'");
  }
}

inline std::vector<long long> integer_list(const std::string& text, const std::string& what) {
  std::vector<long long> out;
  for (const auto& s : split_list(text)) out.push_back(to_integer(s, what));
  if (out.empty()) fail(ErrorKind::InvalidArgument, what + " is empty");
  return out;
}

inline std::vector<std::vector<unsigned>> coefficient_rows(const std::string& text) {
  std::vector<std::vector<unsigned>> rows;
  if (trim(text).empty()) return rows;
  for (const auto& row : split(text, ';')) {
    std::vector<unsigned> r;
    for (const auto& c : split_list(row)) {
      const long long v = to_integer(c, "coefficient");
      if (v < 0) fail(ErrorKind::InvalidArgument, "coefficients are field elements 0..q-1");
      r.push_back(static_cast<unsigned>(v));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Schema, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline FamilyHandle make_family(const std::string& name, const std::vector<std::string>& params) {
  std::map<std::string, long long> values;
  for (const auto& p : params) {
    auto [k, v] = key_value(p);
    values[k] = to_integer(v, "family parameter " + k);
  }
  return FamilyHandle(name, values);
}

inline SelectorSpec selector_spec(const std::vector<std::string>& fixes) {
  SelectorSpec spec;
  for (const auto& f : fixes) {
    auto [k, v] = key_value(f);
    spec[k] = v;
  }
  return spec;
}

inline ParseOptions parse_options(const std::vector<std::string>& declares) {
  ParseOptions opt;
  for (const auto& d : declares) {
    const auto colon = d.find(':');
    if (colon == std::string::npos) fail(ErrorKind::InvalidArgument, "--declare takes NAME:SORT");
    opt.free_sorts[d.substr(0, colon)] = d.substr(colon + 1);
  }
  return opt;
}

inline nlohmann::json count_json(const Count& c) { return to_string(c.value); }

// Shared option block for family-based subcommands.
struct FamilyArgs {
  std::string name;
  std::vector<std::string> params;
  std::string indices;

  void add(CLI::App* app) {
    app->add_option("--family", name, "Family id (see `family --list`)")->required();
    app->add_option("--param", params, "Family generator parameter NAME=VALUE");
    app->add_option("--indices", indices, "Comma-separated increasing indices")->required();
  }
};

}  // namespace detail

// Runs one command line (without the program name). Payloads go to out,
// diagnostics to err; the return value is the exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"pfdim: exact counting and finite-scale dimension experiments", "pfdim"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::uint64_t seed = 0;
  unsigned workers = default_workers();
  app.add_option("--seed", seed, "Seed for randomized harnesses");
  app.add_option("--workers", workers, "Worker threads (default: available parallelism)");

  std::function<int()> action;
  nlohmann::json payload;

  // count
  auto* count_cmd = app.add_subcommand("count", "Count the tuples satisfying a formula");
  std::string c_structure, c_family, c_formula, c_count_vars;
  long long c_index = 0;
  std::vector<std::string> c_fix, c_params, c_declare;
  count_cmd->add_option("--structure", c_structure, "Structure JSON file");
  count_cmd->add_option("--family", c_family, "Family id instead of a structure file");
  count_cmd->add_option("--index", c_index, "Family index");
  count_cmd->add_option("--param", c_params, "Family generator parameter NAME=VALUE");
  count_cmd->add_option("--formula", c_formula, "Formula text")->required();
  count_cmd->add_option("--fix", c_fix, "Fixed variable NAME=ID (structure) or NAME=SELECTOR (family)");
  count_cmd->add_option("--count-vars", c_count_vars, "Comma-separated counted variables, NAME or NAME:SORT");
  count_cmd->add_option("--declare", c_declare, "Sort of a free variable, NAME:SORT");
  count_cmd->callback([&] {
    action = [&] {
      EngineOptions opt;
      opt.workers = workers;
      const auto popt = detail::parse_options(c_declare);
      std::vector<std::string> counted = detail::split_list(c_count_vars);
      auto default_counted = [&](const Formula& f, const std::vector<std::string>& fixed) {
        if (!counted.empty()) return;
        for (const auto& v : free_variables(f)) {
          if (std::find(fixed.begin(), fixed.end(), v.name) == fixed.end()) counted.push_back(v.name);
        }
        if (counted.empty()) fail(ErrorKind::InvalidArgument, "nothing to count: give --count-vars NAME:SORT");
      };
      if (c_structure.empty() == c_family.empty()) fail(ErrorKind::InvalidArgument, "give exactly one of --structure and --family");
      if (!c_structure.empty()) {
        const FiniteStructure m = load_structure(c_structure);
        const Formula f = parse_formula_or_throw(c_formula, m.signature(), popt);
        Assignment fixed;
        std::vector<std::string> names;
        for (const auto& fx : c_fix) {
          auto [name, value] = detail::key_value(fx);
          std::string sort;
          for (const auto& v : free_variables(f)) {
            if (v.name == name) sort = v.sort;
          }
          if (sort.empty()) fail(ErrorKind::InvalidArgument, "fixed variable '" + name + "' does not occur free");
          const long long id = detail::to_integer(value, "element id for " + name);
          if (id < 0) fail(ErrorKind::OutOfRange, "element ids are nonnegative");
          fixed.set(name, sort, static_cast<ElementId>(id));
          names.push_back(name);
        }
        default_counted(f, names);
        payload = {{"count", detail::count_json(count(f, m, fixed, counted, opt))}};
        return kExitOk;
      }
      const FamilyHandle fam = detail::make_family(c_family, c_params);
      const BlockStructure b = fam.blocks(c_index);
      const Formula f = parse_formula_or_throw(c_formula, b.signature(), popt);
      const SelectorSpec spec = detail::selector_spec(c_fix);
      std::vector<std::string> names;
      for (const auto& [k, v] : spec) names.push_back(k);
      default_counted(f, names);
      const auto seq = count_family(f, fam, {c_index}, spec, counted, opt);
      payload = {{"count", detail::count_json(seq.entries[0].second)}};
      return kExitOk;
    };
  });

  // family
  auto* family_cmd = app.add_subcommand("family", "List families or generate a member structure");
  bool f_list = false;
  std::string f_name, f_out = "-";
  long long f_index = 0;
  std::vector<std::string> f_params;
  family_cmd->add_flag("--list", f_list, "List the family catalog");
  family_cmd->add_option("--name", f_name, "Family id");
  family_cmd->add_option("--index", f_index, "Index to generate");
  family_cmd->add_option("--param", f_params, "Generator parameter NAME=VALUE");
  family_cmd->add_option("--out", f_out, "Output file, or - for stdout");
  family_cmd->callback([&] {
    action = [&] {
      if (f_list) {
        nlohmann::json fams = nlohmann::json::array();
        for (const auto& fi : family_catalog()) {
          nlohmann::json params = nlohmann::json::array();
          for (const auto& p : fi.params) params.push_back({{"name", p.name}, {"default", p.default_value}, {"description", p.description}});
          fams.push_back({{"id", fi.id}, {"description", fi.description}, {"params", params}, {"selectors", fi.selectors}, {"max_index", fi.max_index}});
        }
        payload = {{"families", fams}};
        return kExitOk;
      }
      if (f_name.empty()) fail(ErrorKind::InvalidArgument, "give --list or --name");
      const FamilyHandle fam = detail::make_family(f_name, f_params);
      const FiniteStructure m = fam.generate(f_index);
      auto doc = structure_to_json(m);
      if (f_out == "-") {
        payload = doc;
      } else {
        std::ofstream file(f_out);
        if (!file) fail(ErrorKind::Io, "cannot write '" + f_out + "'");
        file << doc.dump() << "\n";
        payload = {{"written", f_out}, {"elements", m.total_size()}};
      }
      return kExitOk;
    };
  });

  // dim-compare
  auto* dim_cmd = app.add_subcommand("dim-compare", "Compare the growth of two definable sets along a family");
  detail::FamilyArgs d_fam;
  std::string d_formula, d_formula_y, d_count_vars = "x", d_csv;
  std::vector<std::string> d_fix_x, d_fix_y;
  DimensionThresholds d_th;
  std::optional<std::size_t> d_burn;
  d_fam.add(dim_cmd);
  dim_cmd->add_option("--formula", d_formula, "Formula for X")->required();
  dim_cmd->add_option("--formula-y", d_formula_y, "Formula for Y (default: same as X)");
  dim_cmd->add_option("--fix-x", d_fix_x, "Parameter selector for X, NAME=SELECTOR");
  dim_cmd->add_option("--fix-y", d_fix_y, "Parameter selector for Y, NAME=SELECTOR");
  dim_cmd->add_option("--count-vars", d_count_vars, "Comma-separated counted variables");
  dim_cmd->add_option("--tau", d_th.tau, "Log-ratio threshold");
  dim_cmd->add_option("--burn-in", d_burn, "First sample position used by the tail tests");
  dim_cmd->add_option("--min-samples", d_th.min_samples, "Samples needed for a verdict");
  dim_cmd->add_option("--csv", d_csv, "Also write the log-count table to this CSV file");
  dim_cmd->callback([&] {
    action = [&] {
      EngineOptions opt;
      opt.workers = workers;
      d_th.burn_in = d_burn;
      const FamilyHandle fam = detail::make_family(d_fam.name, d_fam.params);
      const auto indices = detail::integer_list(d_fam.indices, "--indices");
      const BlockStructure b = fam.blocks(indices.front());
      const Formula fx = parse_formula_or_throw(d_formula, b.signature());
      const Formula fy = parse_formula_or_throw(d_formula_y.empty() ? d_formula : d_formula_y, b.signature());
      const auto counted = detail::split_list(d_count_vars);
      const auto sx = count_family(fx, fam, indices, detail::selector_spec(d_fix_x), counted, opt);
      const auto sy = count_family(fy, fam, indices, detail::selector_spec(d_fix_y), counted, opt);
      const auto v = delta_compare(sx, sy, d_th);
      if (!d_csv.empty()) {
        std::ofstream file(d_csv);
        if (!file) fail(ErrorKind::Io, "cannot write '" + d_csv + "'");
        file << to_csv({sx, sy});
      }
      payload = {{"verdict", to_json(v)}, {"x", to_json(sx)}, {"y", to_json(sy)}};
      return kExitOk;
    };
  });

  // chain
  auto* chain_cmd = app.add_subcommand("chain", "Detect strictly dimension-dropping chains of conjunctions");
  detail::FamilyArgs ch_fam;
  std::vector<std::string> ch_steps;
  std::string ch_count_vars = "x";
  DimensionThresholds ch_th;
  std::optional<std::size_t> ch_burn;
  ch_fam.add(chain_cmd);
  chain_cmd->add_option("--step", ch_steps, "Conjunct 'FORMULA' or 'FORMULA @ NAME=SELECTOR,...'")->required();
  chain_cmd->add_option("--count-vars", ch_count_vars, "Comma-separated counted variables");
  chain_cmd->add_option("--tau", ch_th.tau, "Log-ratio threshold");
  chain_cmd->add_option("--burn-in", ch_burn, "First sample position used by the tail tests");
  chain_cmd->callback([&] {
    action = [&] {
      EngineOptions opt;
      opt.workers = workers;
      ch_th.burn_in = ch_burn;
      const FamilyHandle fam = detail::make_family(ch_fam.name, ch_fam.params);
      const auto indices = detail::integer_list(ch_fam.indices, "--indices");
      const BlockStructure b = fam.blocks(indices.front());
      std::vector<ChainStep> steps;
      for (const auto& s : ch_steps) {
        const auto at = s.find('@');
        ChainStep step{parse_formula_or_throw(detail::trim(s.substr(0, at)), b.signature()), {}};
        if (at != std::string::npos) step.selectors = detail::selector_spec(detail::split_list(s.substr(at + 1)));
        steps.push_back(std::move(step));
      }
      const auto r = chain_detect(steps, fam, indices, detail::split_list(ch_count_vars), ch_th, opt);
      payload = to_json(r);
      return r.monotone ? kExitOk : kExitViolation;
    };
  });

  // spectrum
  auto* spec_cmd = app.add_subcommand("spectrum", "Cluster the sizes of a uniformly definable family");
  detail::FamilyArgs sp_fam;
  std::string sp_formula, sp_params = "y";
  std::vector<std::string> sp_selectors;
  DimensionThresholds sp_th;
  std::size_t sp_max = SpectrumOptions{}.max_parameter_classes;
  sp_fam.add(spec_cmd);
  spec_cmd->add_option("--formula", sp_formula, "Formula phi(x; y)")->required();
  spec_cmd->add_option("--params", sp_params, "Comma-separated parameter variables");
  spec_cmd->add_option("--selector-set", sp_selectors, "Restrict parameters to NAME=SELECTOR,... (repeatable)");
  spec_cmd->add_option("--gamma", sp_th.gamma, "Single-linkage gap on log-counts");
  spec_cmd->add_option("--max-classes", sp_max, "Budget on parameter classes per index");
  spec_cmd->callback([&] {
    action = [&] {
      EngineOptions opt;
      opt.workers = workers;
      const FamilyHandle fam = detail::make_family(sp_fam.name, sp_fam.params);
      const auto indices = detail::integer_list(sp_fam.indices, "--indices");
      const BlockStructure b = fam.blocks(indices.front());
      SpectrumOptions so;
      so.parameters = detail::split_list(sp_params);
      so.max_parameter_classes = sp_max;
      for (const auto& s : sp_selectors) so.selector_set.push_back(detail::selector_spec(detail::split_list(s)));
      const auto r = fmv_spectrum(parse_formula_or_throw(sp_formula, b.signature()), fam, indices, so, sp_th, opt);
      payload = to_json(r);
      for (const auto& si : r.per_index) {
        if (si.clusters.size() > si.parameter_classes) return kExitViolation;
      }
      return kExitOk;
    };
  });

  // abelian-count
  auto* ab_cmd = app.add_subcommand("abelian-count", "Count solutions of a standard-form system in (Z/p^n)^m");
  std::string ab_system, ab_params;
  unsigned ab_p = 2, ab_n = 1, ab_m = 1;
  bool ab_symbolic = false, ab_check = false;
  ab_cmd->add_option("--system", ab_system, "Conjunction such as 'div(2^2, x1 - y1) & x1 != 0'")->required();
  ab_cmd->add_option("--p", ab_p, "Prime");
  ab_cmd->add_option("--n", ab_n, "Exponent: cyclic factor Z/p^n");
  ab_cmd->add_option("--m", ab_m, "Number of cyclic factors");
  ab_cmd->add_option("--params", ab_params, "Comma-separated element ids for y1, y2, ...");
  ab_cmd->add_flag("--symbolic", ab_symbolic, "Also emit the guarded polynomials");
  ab_cmd->add_flag("--check", ab_check, "Compare with brute-force enumeration");
  ab_cmd->callback([&] {
    action = [&] {
      const AbelianSystem sys = parse_abelian(ab_system);
      const Homocyclic g(ab_p, ab_n, ab_m);
      std::vector<GroupElement> params;
      for (const auto& id : detail::split_list(ab_params)) {
        const long long v = detail::to_integer(id, "parameter id");
        if (v < 0 || BigInt(v) >= g.order()) fail(ErrorKind::OutOfRange, "parameter id " + id + " outside the group");
        params.push_back(g.element(static_cast<std::uint64_t>(v)));
      }
      if (params.size() < sys.s) fail(ErrorKind::MissingAssignment, "the system uses " + std::to_string(sys.s) + " parameters");
      nlohmann::json atoms = nlohmann::json::array();
      for (const auto& a : sys.atoms) atoms.push_back(render_atom(a));
      const std::size_t r = std::max<std::size_t>(sys.r, 1);
      const Count c = r == 1 ? exact_count(sys.atoms, params, g) : brute_force_count(sys.atoms, r, params, g);
      payload = {{"group", {{"p", ab_p}, {"n", ab_n}, {"m", ab_m}}}, {"atoms", atoms}, {"variables", r}, {"count", detail::count_json(c)}};
      int code = kExitOk;
      if (ab_check) {
        const Count bf = brute_force_count(sys.atoms, r, params, g);
        payload["brute_force"] = detail::count_json(bf);
        if (!(bf == c)) code = kExitViolation;
      }
      if (ab_symbolic) {
        const auto sym = symbolic_count(sys.atoms, r, sys.s);
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : sym.entries) entries.push_back({{"guard", e.guard.to_string()}, {"poly", e.poly.to_string()}});
        const auto firing = sym.firing(g, params);
        nlohmann::json js = {{"d", sym.d}, {"d_sufficed", sym.d_sufficed}, {"entries", entries}, {"firing", firing}};
        if (firing.size() != 1) {
          code = kExitViolation;
        } else {
          const Count v = evaluate_poly(sym.entries[firing[0]].poly, ab_p, ab_m, ab_n);
          js["value"] = detail::count_json(v);
          if (!(v == c)) code = kExitViolation;
        }
        payload["symbolic"] = js;
      }
      return code;
    };
  });

  // vs-count
  auto* vs_cmd = app.add_subcommand("vs-count", "Count theta solutions or coset differences in F_q^dim");
  unsigned vs_q = 2, vs_dim = 2;
  std::string vs_params, vs_w, vs_wp, vs_cosets;
  bool vs_check = false;
  vs_cmd->add_option("--q", vs_q, "Field order");
  vs_cmd->add_option("--dim", vs_dim, "Dimension");
  vs_cmd->add_option("--params", vs_params, "Comma-separated parameter vector ids");
  vs_cmd->add_option("--w", vs_w, "Shifted terms u + w_i as coefficient rows over the parameters, rows split by ';'");
  vs_cmd->add_option("--w-prime", vs_wp, "Unshifted terms w'_j as coefficient rows");
  vs_cmd->add_option("--cosets", vs_cosets, "JSON file {include:[{offset,span}], exclude:[...]} instead of a theta atom");
  vs_cmd->add_flag("--check", vs_check, "Compare with brute-force enumeration");
  vs_cmd->callback([&] {
    action = [&] {
      const FiniteField f(vs_q);
      const BigInt v_size = pow(BigInt(vs_q), vs_dim);
      if (vs_dim < 1 || vs_dim > 8) fail(ErrorKind::OutOfRange, "dimension must lie in 1..8");
      auto json_poly = [&](const VFPolynomial& p) {
        return nlohmann::json{{"text", p.to_string()}, {"terms", p.to_json()["terms"]}, {"value", to_string(p.evaluate(v_size, BigInt(vs_q)))}};
      };
      int code = kExitOk;
      if (!vs_cosets.empty()) {
        const auto doc = detail::read_json(vs_cosets);
        auto read_cosets = [&](const char* key) {
          std::vector<AffineCoset> out;
          if (!doc.contains(key)) return out;
          try {
            for (const auto& c : doc.at(key)) {
              AffineCoset a{c.at("offset").get<FieldVector>(), c.value("span", std::vector<FieldVector>{})};
              if (a.offset.size() != vs_dim) fail(ErrorKind::Schema, "offset has the wrong length");
              for (const auto& s : a.span) {
                if (s.size() != vs_dim) fail(ErrorKind::Schema, "span vector has the wrong length");
              }
              out.push_back(std::move(a));
            }
          } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::Schema, std::string("bad coset file: ") + e.what());
          }
          return out;
        };
        CosetCountSpec spec{read_cosets("include"), read_cosets("exclude")};
        const auto c = count_coset_difference(f, vs_dim, spec);
        payload = {{"kind", spec.kind()}, {"count", detail::count_json(c.count)}, {"poly", json_poly(c.poly)}};
        if (c.poly.evaluate(v_size, BigInt(vs_q)) != Rational(c.count.value)) code = kExitViolation;
        if (vs_check) {
          const Count bf = brute_force_coset_difference(f, vs_dim, spec);
          payload["brute_force"] = detail::count_json(bf);
          if (!(bf == c.count)) code = kExitViolation;
        }
        return code;
      }
      std::vector<FieldVector> params;
      for (const auto& id : detail::split_list(vs_params)) {
        const long long v = detail::to_integer(id, "parameter id");
        if (v < 0 || BigInt(v) >= v_size) fail(ErrorKind::OutOfRange, "parameter id " + id + " outside the space");
        params.push_back(vector_from_id(static_cast<std::uint64_t>(v), vs_q, vs_dim));
      }
      VectorTermSpec spec{detail::coefficient_rows(vs_w), detail::coefficient_rows(vs_wp)};
      for (const auto* rows : {&spec.w, &spec.w_prime}) {
        for (const auto& row : *rows) {
          if (row.size() != params.size()) fail(ErrorKind::InvalidArgument, "each coefficient row needs one entry per parameter");
          for (auto c : row) {
            if (c >= vs_q) fail(ErrorKind::InvalidArgument, "coefficients are field elements 0..q-1");
          }
        }
      }
      const auto t = count_theta_case(f, vs_dim, spec, params);
      payload = {{"guard", to_string(t.guard)},
                 {"span_dim", t.span_dim},
                 {"first", detail::count_json(t.first)},
                 {"second", detail::count_json(t.second)},
                 {"count", detail::count_json(t.total)},
                 {"first_poly", json_poly(t.first_poly)},
                 {"second_poly", json_poly(t.second_poly)},
                 {"poly", json_poly(t.poly)}};
      if (t.poly.evaluate(v_size, BigInt(vs_q)) != Rational(t.total.value)) code = kExitViolation;
      if (vs_check) {
        const Count bf = brute_force_theta(f, vs_dim, spec, params);
        payload["brute_force"] = detail::count_json(bf);
        if (!(bf == t.total)) code = kExitViolation;
      }
      return code;
    };
  });

  // measure-kcap
  auto* kcap_cmd = app.add_subcommand("measure-kcap", "Find k events whose intersection meets eps^(3^(k-1))");
  std::string k_input, k_eps;
  unsigned k_k = 2;
  bool k_recursive = false;
  kcap_cmd->add_option("--input", k_input, "Measure-space JSON file")->required();
  kcap_cmd->add_option("--k", k_k, "Number of events to intersect");
  kcap_cmd->add_option("--eps", k_eps, "Lower bound on the event measures as p/q (default: their minimum)");
  kcap_cmd->add_flag("--recursive", k_recursive, "Use the recursive search even for small inputs");
  kcap_cmd->callback([&] {
    action = [&] {
      auto in = measure_from_json(detail::read_json(k_input));
      KIntersectionOptions opt;
      opt.workers = workers;
      opt.force_recursive = k_recursive;
      std::optional<Rational> eps;
      if (!k_eps.empty()) eps = parse_rational(k_eps);
      const auto r = find_k_intersection(in.space, in.events, k_k, eps, opt);
      payload = to_json(r);
      if (r.status == KIntersectionStatus::Found && r.measure < r.bound) return kExitViolation;
      return kExitOk;
    };
  });

  // pairwise-check
  auto* pair_cmd = app.add_subcommand("pairwise-check", "Check the pairwise intersection threshold N(eps)");
  std::string p_input, p_eps;
  pair_cmd->add_option("--input", p_input, "Measure-space JSON file")->required();
  pair_cmd->add_option("--eps", p_eps, "eps as p/q")->required();
  pair_cmd->callback([&] {
    action = [&] {
      auto in = measure_from_json(detail::read_json(p_input));
      const auto r = pairwise_threshold_check(in.space, in.events, parse_rational(p_eps));
      payload = to_json(r);
      return r.ok && r.dagger.holds ? kExitOk : kExitViolation;
    };
  });

  // word-image
  auto* word_cmd = app.add_subcommand("word-image", "Image of a word map in a finite group");
  std::string w_group, w_word, w_triple;
  word_cmd->add_option("--group", w_group, "C<k>, S3, S4, A4, A5 or PSL(2,7)")->required();
  word_cmd->add_option("--word", w_word, "Word such as x^2 or [x,y]")->required();
  word_cmd->add_option("--triple", w_triple, "Three words 'w1;w2;w3': does w1(G)w2(G)w3(G) cover G?");
  word_cmd->callback([&] {
    action = [&] {
      EngineOptions opt;
      opt.workers = workers;
      const FiniteGroup g = named_group(w_group);
      const auto image = word_image(parse_word(w_word), g, opt);
      auto labels = [&](const std::vector<std::uint32_t>& ids) {
        nlohmann::json out = nlohmann::json::array();
        for (auto a : ids) out.push_back(g.label(a));
        return out;
      };
      payload = {{"group", g.name()}, {"order", g.order()}, {"word", w_word}, {"size", image.size()}, {"elements", labels(image)}};
      if (!w_triple.empty()) {
        const auto words = detail::split(w_triple, ';');
        if (words.size() != 3) fail(ErrorKind::InvalidArgument, "--triple takes three words separated by ';'");
        std::vector<std::vector<std::uint32_t>> images;
        for (const auto& w : words) images.push_back(word_image(parse_word(detail::trim(w)), g, opt));
        const auto cover = triple_product_covers(images[0], images[1], images[2], g);
        payload["triple"] = {{"words", words}, {"covers", cover.covers}, {"gap", labels(cover.gap)}};
      }
      return kExitOk;
    };
  });

  // Name the offending word instead of CLI11's generic complaint.
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--seed" || args[i] == "--workers") {
      ++i;
      continue;
    }
    if (args[i].rfind("-", 0) == 0) break;
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == args[i];
    if (!known) {
      err << "error: unknown subcommand '" << args[i] << "'\n\n" << app.help();
      return kExitUsage;
    }
    break;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    // Help is still a JSON payload so stdout stays machine-readable.
    const CLI::App* target = &app;
    for (const auto* sub : app.get_subcommands()) target = sub;
    out << nlohmann::json{{"help", target->help()}}.dump() << "\n";
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << nlohmann::json{{"help", app.help("", CLI::AppFormatMode::All)}}.dump() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  try {
    const int code = action();
    out << payload.dump() << "\n";
    return code;
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace pfdim::cli

#endif  // PFDIM_CLI_HPP
