#ifndef PFDIM_STRUCTURE_IO_HPP
#define PFDIM_STRUCTURE_IO_HPP

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pfdim/error.hpp"
#include "pfdim/structure.hpp"

namespace pfdim {

using Json = nlohmann::json;

namespace detail {

inline const Json& require_key(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) fail(ErrorKind::Schema, where + ": missing \"" + key + "\"");
  return obj.at(key);
}

inline std::string require_string(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require_key(obj, key, where);
  if (!v.is_string()) fail(ErrorKind::Schema, where + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

inline const Json& require_array(const Json& obj, const char* key, const std::string& where) {
  const Json& v = require_key(obj, key, where);
  if (!v.is_array()) fail(ErrorKind::Schema, where + ": \"" + key + "\" must be an array");
  return v;
}

inline std::uint64_t require_id(const Json& v, const std::string& where) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) fail(ErrorKind::Schema, where + ": ids must be integers");
  if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
    fail(ErrorKind::InvariantViolation, where + ": negative element id");
  }
  return v.get<std::uint64_t>();
}

inline std::vector<SortId> sort_list(const Signature& sig, const Json& arr, const std::string& where) {
  if (!arr.is_array()) fail(ErrorKind::Schema, where + ": sort list must be an array");
  std::vector<SortId> out;
  for (const auto& s : arr) {
    if (!s.is_string()) fail(ErrorKind::Schema, where + ": sort names must be strings");
    auto id = sig.find_sort(s.get<std::string>());
    if (!id) fail(ErrorKind::InvariantViolation, where + ": undeclared sort '" + s.get<std::string>() + "'");
    out.push_back(*id);
  }
  return out;
}

inline std::vector<ElementId> id_tuple(const Json& row, const std::vector<std::uint64_t>& bounds, const std::string& where) {
  if (!row.is_array()) fail(ErrorKind::Schema, where + ": tuples must be arrays");
  if (row.size() != bounds.size()) fail(ErrorKind::InvariantViolation, where + ": tuple has wrong arity");
  std::vector<ElementId> out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    const std::uint64_t id = require_id(row[i], where);
    if (id >= bounds[i]) {
      fail(ErrorKind::InvariantViolation, where + ": element id " + std::to_string(id) + " outside universe of size " +
                                              std::to_string(bounds[i]));
    }
    out.push_back(static_cast<ElementId>(id));
  }
  return out;
}

}  // namespace detail

// Builds and validates a structure from the interchange JSON.
inline FiniteStructure structure_from_json(const Json& doc) {
  using namespace detail;
  if (!doc.is_object()) fail(ErrorKind::Schema, "structure: top level must be an object");
  Signature sig;
  std::vector<std::uint64_t> sizes;
  for (const auto& s : require_array(doc, "sorts", "structure")) {
    const std::string name = require_string(s, "name", "sort");
    const Json& size = require_key(s, "size", "sort '" + name + "'");
    if (!size.is_number_integer() && !size.is_number_unsigned()) fail(ErrorKind::Schema, "sort '" + name + "': size must be an integer");
    if (size.is_number_integer() && size.get<std::int64_t>() <= 0) {
      fail(ErrorKind::InvariantViolation, "sort '" + name + "': universe must be nonempty");
    }
    if (sig.find_sort(name)) fail(ErrorKind::InvariantViolation, "duplicate sort '" + name + "'");
    sig.add_sort(name);
    sizes.push_back(size.get<std::uint64_t>());
  }
  const Json empty = Json::array();
  const Json& relations = doc.contains("relations") ? require_array(doc, "relations", "structure") : empty;
  const Json& functions = doc.contains("functions") ? require_array(doc, "functions", "structure") : empty;
  const Json& constants = doc.contains("constants") ? require_array(doc, "constants", "structure") : empty;

  for (const auto& r : relations) {
    const std::string name = require_string(r, "name", "relation");
    if (sig.find_relation(name)) fail(ErrorKind::InvariantViolation, "duplicate relation '" + name + "'");
    auto args = sort_list(sig, require_key(r, "sorts", "relation '" + name + "'"), "relation '" + name + "'");
    if (args.empty()) fail(ErrorKind::InvariantViolation, "relation '" + name + "' has no arguments");
    sig.add_relation(name, args);
  }
  for (const auto& f : functions) {
    const std::string name = require_string(f, "name", "function");
    if (sig.find_function(name)) fail(ErrorKind::InvariantViolation, "duplicate function '" + name + "'");
    auto args = sort_list(sig, require_key(f, "argSorts", "function '" + name + "'"), "function '" + name + "'");
    if (args.empty()) fail(ErrorKind::InvariantViolation, "function '" + name + "' has no arguments");
    const std::string result = require_string(f, "resultSort", "function '" + name + "'");
    auto rs = sig.find_sort(result);
    if (!rs) fail(ErrorKind::InvariantViolation, "function '" + name + "': undeclared sort '" + result + "'");
    sig.add_function(name, args, *rs);
  }
  for (const auto& c : constants) {
    const std::string name = require_string(c, "name", "constant");
    if (sig.find_constant(name)) fail(ErrorKind::InvariantViolation, "duplicate constant '" + name + "'");
    const std::string sort = require_string(c, "sort", "constant '" + name + "'");
    auto s = sig.find_sort(sort);
    if (!s) fail(ErrorKind::InvariantViolation, "constant '" + name + "': undeclared sort '" + sort + "'");
    sig.add_constant(name, *s);
  }

  const Signature sig_copy = sig;
  StructureBuilder builder(std::move(sig), sizes);
  auto bounds_of = [&](const std::vector<SortId>& args) {
    std::vector<std::uint64_t> b;
    for (SortId s : args) b.push_back(sizes[s]);
    return b;
  };

  for (std::size_t r = 0; r < relations.size(); ++r) {
    const auto& sym = sig_copy.relations()[r];
    const std::string where = "relation '" + sym.name + "'";
    const auto bounds = bounds_of(sym.args);
    for (const auto& row : require_array(relations[r], "tuples", where)) {
      builder.add_tuple(static_cast<SymbolId>(r), id_tuple(row, bounds, where));
    }
  }
  for (std::size_t f = 0; f < functions.size(); ++f) {
    const auto& sym = sig_copy.functions()[f];
    const std::string where = "function '" + sym.name + "'";
    auto bounds = bounds_of(sym.args);
    bounds.push_back(sizes[sym.result]);
    const std::uint64_t cells = detail::checked_product(bounds_of(sym.args));
    if (cells == 0 || cells > kFunctionTableCells) fail(ErrorKind::BudgetExceeded, where + ": domain too large");
    std::vector<ElementId> values(cells, 0);
    std::vector<bool> seen(cells, false);
    const auto strides = detail::strides_for(bounds_of(sym.args));
    for (const auto& row : require_array(functions[f], "table", where)) {
      auto t = id_tuple(row, bounds, where);
      std::uint64_t idx = 0;
      for (std::size_t i = 0; i + 1 < t.size(); ++i) idx += strides[i] * t[i];
      if (seen[idx]) fail(ErrorKind::InvariantViolation, where + ": argument tuple listed twice");
      seen[idx] = true;
      values[idx] = t.back();
    }
    for (bool s : seen) {
      if (!s) fail(ErrorKind::InvariantViolation, where + ": table is not total");
    }
    builder.set_function_table(sym.name, std::move(values));
  }
  for (const auto& c : constants) {
    const std::string name = c.at("name").get<std::string>();
    const std::uint64_t v = require_id(require_key(c, "value", "constant '" + name + "'"), "constant '" + name + "'");
    const auto s = sig_copy.constants()[*sig_copy.find_constant(name)].sort;
    if (v >= sizes[s]) fail(ErrorKind::InvariantViolation, "constant '" + name + "' out of bounds");
    builder.set_constant(name, static_cast<ElementId>(v));
  }
  return builder.build();
}

inline FiniteStructure parse_structure(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::Schema, std::string("malformed JSON: ") + e.what());
  }
  return structure_from_json(doc);
}

inline FiniteStructure load_structure(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "cannot read '" + path + "'");
  return parse_structure(buffer.str());
}

inline Json structure_to_json(const FiniteStructure& m) {
  const Signature& sig = m.signature();
  Json doc;
  doc["sorts"] = Json::array();
  for (std::size_t s = 0; s < sig.sorts().size(); ++s) {
    doc["sorts"].push_back({{"name", sig.sorts()[s]}, {"size", m.sort_size(static_cast<SortId>(s))}});
  }
  doc["relations"] = Json::array();
  for (std::size_t r = 0; r < sig.relations().size(); ++r) {
    Json sorts = Json::array();
    for (SortId s : sig.relations()[r].args) sorts.push_back(sig.sort_name(s));
    Json tuples = Json::array();
    m.relation(static_cast<SymbolId>(r)).for_each_tuple([&](const std::vector<ElementId>& t) { tuples.push_back(t); });
    doc["relations"].push_back({{"name", sig.relations()[r].name}, {"sorts", sorts}, {"tuples", tuples}});
  }
  doc["functions"] = Json::array();
  for (std::size_t f = 0; f < sig.functions().size(); ++f) {
    const auto& sym = sig.functions()[f];
    Json arg_sorts = Json::array();
    std::vector<std::uint64_t> domain;
    for (SortId s : sym.args) {
      arg_sorts.push_back(sig.sort_name(s));
      domain.push_back(m.sort_size(s));
    }
    const std::uint64_t cells = detail::checked_product(domain);
    if (cells == 0 || cells > kFunctionTableCells) fail(ErrorKind::BudgetExceeded, "function '" + sym.name + "' too large to export");
    Json table = Json::array();
    std::vector<ElementId> args(domain.size(), 0);
    for (std::uint64_t idx = 0; idx < cells; ++idx) {
      std::uint64_t rest = idx;
      for (std::size_t i = domain.size(); i-- > 0;) {
        args[i] = static_cast<ElementId>(rest % domain[i]);
        rest /= domain[i];
      }
      Json row = args;
      row.push_back(m.function(static_cast<SymbolId>(f)).apply(args.data()));
      table.push_back(std::move(row));
    }
    doc["functions"].push_back({{"name", sym.name}, {"argSorts", arg_sorts}, {"resultSort", sig.sort_name(sym.result)}, {"table", table}});
  }
  doc["constants"] = Json::array();
  for (std::size_t c = 0; c < sig.constants().size(); ++c) {
    doc["constants"].push_back({{"name", sig.constants()[c].name},
                                {"sort", sig.sort_name(sig.constants()[c].sort)},
                                {"value", m.constant(static_cast<SymbolId>(c))}});
  }
  return doc;
}

}  // namespace pfdim

#endif  // PFDIM_STRUCTURE_IO_HPP
