#ifndef PFDIM_SIGNATURE_HPP
#define PFDIM_SIGNATURE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pfdim/error.hpp"

namespace pfdim {

using SortId = std::uint32_t;
using SymbolId = std::uint32_t;

struct RelationSymbol {
  std::string name;
  std::vector<SortId> args;
};

struct FunctionSymbol {
  std::string name;
  std::vector<SortId> args;
  SortId result = 0;
};

struct ConstantSymbol {
  std::string name;
  SortId sort = 0;
};

// A multi-sorted first-order vocabulary. Symbols are appended once and never
// removed; names are unique within their kind.
class Signature {
 public:
  SortId add_sort(const std::string& name) {
    if (sort_index_.count(name)) fail(ErrorKind::InvariantViolation, "duplicate sort '" + name + "'");
    sort_index_[name] = static_cast<SortId>(sorts_.size());
    sorts_.push_back(name);
    return static_cast<SortId>(sorts_.size() - 1);
  }

  SymbolId add_relation(const std::string& name, const std::vector<SortId>& args) {
    if (relation_index_.count(name)) fail(ErrorKind::InvariantViolation, "duplicate relation '" + name + "'");
    if (args.empty()) fail(ErrorKind::InvariantViolation, "relation '" + name + "' must have arity >= 1");
    for (SortId s : args) check_sort(s, name);
    relation_index_[name] = static_cast<SymbolId>(relations_.size());
    relations_.push_back({name, args});
    return static_cast<SymbolId>(relations_.size() - 1);
  }

  SymbolId add_function(const std::string& name, const std::vector<SortId>& args, SortId result) {
    if (function_index_.count(name)) fail(ErrorKind::InvariantViolation, "duplicate function '" + name + "'");
    if (args.empty()) fail(ErrorKind::InvariantViolation, "function '" + name + "' must have arity >= 1; use a constant");
    for (SortId s : args) check_sort(s, name);
    check_sort(result, name);
    function_index_[name] = static_cast<SymbolId>(functions_.size());
    functions_.push_back({name, args, result});
    return static_cast<SymbolId>(functions_.size() - 1);
  }

  SymbolId add_constant(const std::string& name, SortId sort) {
    if (constant_index_.count(name)) fail(ErrorKind::InvariantViolation, "duplicate constant '" + name + "'");
    check_sort(sort, name);
    constant_index_[name] = static_cast<SymbolId>(constants_.size());
    constants_.push_back({name, sort});
    return static_cast<SymbolId>(constants_.size() - 1);
  }

  const std::vector<std::string>& sorts() const { return sorts_; }
  const std::vector<RelationSymbol>& relations() const { return relations_; }
  const std::vector<FunctionSymbol>& functions() const { return functions_; }
  const std::vector<ConstantSymbol>& constants() const { return constants_; }

  std::optional<SortId> find_sort(const std::string& name) const { return lookup(sort_index_, name); }
  std::optional<SymbolId> find_relation(const std::string& name) const { return lookup(relation_index_, name); }
  std::optional<SymbolId> find_function(const std::string& name) const { return lookup(function_index_, name); }
  std::optional<SymbolId> find_constant(const std::string& name) const { return lookup(constant_index_, name); }

  SortId sort(const std::string& name) const {
    auto s = find_sort(name);
    if (!s) fail(ErrorKind::UnknownSymbol, "unknown sort '" + name + "'");
    return *s;
  }

  const std::string& sort_name(SortId id) const { return sorts_.at(id); }

 private:
  void check_sort(SortId s, const std::string& owner) const {
    if (s >= sorts_.size()) fail(ErrorKind::InvariantViolation, "symbol '" + owner + "' references an undeclared sort");
  }

  static std::optional<std::uint32_t> lookup(const std::map<std::string, std::uint32_t>& index,
                                             const std::string& name) {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> sorts_;
  std::vector<RelationSymbol> relations_;
  std::vector<FunctionSymbol> functions_;
  std::vector<ConstantSymbol> constants_;
  std::map<std::string, std::uint32_t> sort_index_;
  std::map<std::string, std::uint32_t> relation_index_;
  std::map<std::string, std::uint32_t> function_index_;
  std::map<std::string, std::uint32_t> constant_index_;
};

}  // namespace pfdim

#endif  // PFDIM_SIGNATURE_HPP
