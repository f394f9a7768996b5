#ifndef PFDIM_STRUCTURE_HPP
#define PFDIM_STRUCTURE_HPP

#include <algorithm>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pfdim/error.hpp"
#include "pfdim/signature.hpp"

namespace pfdim {

using ElementId = std::uint32_t;

// Largest universe accepted for an explicit sort.
inline constexpr std::uint64_t kMaxSortSize = std::uint64_t{1} << 30;
// Relation domains up to this many cells are stored as a bitset.
inline constexpr std::uint64_t kDenseRelationCells = std::uint64_t{1} << 26;
// Function domains up to this many cells are stored as a table.
inline constexpr std::uint64_t kFunctionTableCells = std::uint64_t{1} << 24;

namespace detail {

// Product of sizes, or 0 when it would overflow 64 bits.
inline std::uint64_t checked_product(const std::vector<std::uint64_t>& sizes) {
  std::uint64_t product = 1;
  for (std::uint64_t s : sizes) {
    if (s != 0 && product > UINT64_MAX / s) return 0;
    product *= s;
  }
  return product;
}

inline std::vector<std::uint64_t> strides_for(const std::vector<std::uint64_t>& sizes) {
  std::vector<std::uint64_t> strides(sizes.size(), 1);
  for (std::size_t i = sizes.size(); i-- > 1;) strides[i - 1] = strides[i] * sizes[i];
  return strides;
}

}  // namespace detail

class RelationTable {
 public:
  using Predicate = std::function<bool(const ElementId*)>;
  enum class Mode { Dense, Sparse, Computed };

  RelationTable() = default;

  static RelationTable from_tuples(std::vector<std::uint64_t> domain, std::vector<std::vector<ElementId>> tuples) {
    RelationTable table;
    table.domain_ = std::move(domain);
    const std::uint64_t cells = detail::checked_product(table.domain_);
    if (cells != 0 && cells <= kDenseRelationCells) {
      table.mode_ = Mode::Dense;
      table.strides_ = detail::strides_for(table.domain_);
      table.bits_.assign((cells + 63) / 64, 0);
      for (const auto& t : tuples) {
        const std::uint64_t idx = table.flat(t.data());
        table.bits_[idx >> 6] |= std::uint64_t{1} << (idx & 63);
      }
      for (auto w : table.bits_) table.size_ += static_cast<std::uint64_t>(__builtin_popcountll(w));
    } else {
      table.mode_ = Mode::Sparse;
      std::sort(tuples.begin(), tuples.end());
      tuples.erase(std::unique(tuples.begin(), tuples.end()), tuples.end());
      table.size_ = tuples.size();
      table.sparse_ = std::move(tuples);
    }
    return table;
  }

  static RelationTable computed(std::vector<std::uint64_t> domain, Predicate predicate) {
    RelationTable table;
    table.domain_ = std::move(domain);
    table.mode_ = Mode::Computed;
    table.predicate_ = std::move(predicate);
    return table;
  }

  bool holds(const ElementId* args) const {
    switch (mode_) {
      case Mode::Dense: {
        const std::uint64_t idx = flat(args);
        return (bits_[idx >> 6] >> (idx & 63)) & 1u;
      }
      case Mode::Sparse: {
        std::vector<ElementId> key(args, args + domain_.size());
        return std::binary_search(sparse_.begin(), sparse_.end(), key);
      }
      case Mode::Computed:
        return predicate_(args);
    }
    return false;
  }

  Mode mode() const { return mode_; }
  std::size_t arity() const { return domain_.size(); }
  const std::vector<std::uint64_t>& domain() const { return domain_; }

  // Calls visit(tuple) for every tuple in the relation, in lexicographic order.
  // Computed relations are enumerated over their domain, limited by max_cells.
  template <class Visit>
  void for_each_tuple(Visit&& visit, std::uint64_t max_cells = kDenseRelationCells) const {
    if (mode_ == Mode::Sparse) {
      for (const auto& t : sparse_) visit(t);
      return;
    }
    const std::uint64_t cells = detail::checked_product(domain_);
    if (cells == 0 || cells > max_cells) {
      fail(ErrorKind::BudgetExceeded, "relation domain too large to enumerate");
    }
    std::vector<ElementId> t(domain_.size(), 0);
    for (std::uint64_t idx = 0; idx < cells; ++idx) {
      std::uint64_t rest = idx;
      for (std::size_t i = domain_.size(); i-- > 0;) {
        t[i] = static_cast<ElementId>(rest % domain_[i]);
        rest /= domain_[i];
      }
      if (holds(t.data())) visit(t);
    }
  }

 private:
  std::uint64_t flat(const ElementId* args) const {
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < domain_.size(); ++i) idx += strides_[i] * args[i];
    return idx;
  }

  Mode mode_ = Mode::Sparse;
  std::vector<std::uint64_t> domain_;
  std::vector<std::uint64_t> strides_;
  std::vector<std::uint64_t> bits_;
  std::vector<std::vector<ElementId>> sparse_;
  Predicate predicate_;
  std::uint64_t size_ = 0;
};

class FunctionTable {
 public:
  using Map = std::function<ElementId(const ElementId*)>;

  FunctionTable() = default;

  static FunctionTable from_table(std::vector<std::uint64_t> domain, std::vector<ElementId> values) {
    FunctionTable fn;
    fn.domain_ = std::move(domain);
    fn.strides_ = detail::strides_for(fn.domain_);
    fn.values_ = std::move(values);
    return fn;
  }

  static FunctionTable computed(std::vector<std::uint64_t> domain, Map map) {
    FunctionTable fn;
    fn.domain_ = std::move(domain);
    fn.map_ = std::move(map);
    return fn;
  }

  ElementId apply(const ElementId* args) const {
    if (map_) return map_(args);
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < domain_.size(); ++i) idx += strides_[i] * args[i];
    return values_[idx];
  }

  bool is_table() const { return !map_; }
  std::size_t arity() const { return domain_.size(); }
  const std::vector<std::uint64_t>& domain() const { return domain_; }

 private:
  std::vector<std::uint64_t> domain_;
  std::vector<std::uint64_t> strides_;
  std::vector<ElementId> values_;
  Map map_;
};

// An immutable multi-sorted finite structure. Elements of each sort are the
// dense ids 0..size-1; optional display labels carry their meaning.
class FiniteStructure {
 public:
  const Signature& signature() const { return *signature_; }
  std::shared_ptr<const Signature> signature_ptr() const { return signature_; }

  std::uint64_t sort_size(SortId s) const { return sizes_.at(s); }
  const std::vector<std::uint64_t>& sort_sizes() const { return sizes_; }
  std::uint64_t total_size() const {
    std::uint64_t total = 0;
    for (auto s : sizes_) total += s;
    return total;
  }

  const RelationTable& relation(SymbolId r) const { return relations_[r]; }
  const FunctionTable& function(SymbolId f) const { return functions_[f]; }
  ElementId constant(SymbolId c) const { return constants_[c]; }

  bool holds(const std::string& relation_name, const std::vector<ElementId>& args) const {
    auto r = signature_->find_relation(relation_name);
    if (!r) fail(ErrorKind::UnknownSymbol, "unknown relation '" + relation_name + "'");
    check_args(signature_->relations()[*r].args, args, relation_name);
    return relations_[*r].holds(args.data());
  }

  ElementId apply(const std::string& function_name, const std::vector<ElementId>& args) const {
    auto f = signature_->find_function(function_name);
    if (!f) fail(ErrorKind::UnknownSymbol, "unknown function '" + function_name + "'");
    check_args(signature_->functions()[*f].args, args, function_name);
    return functions_[*f].apply(args.data());
  }

  ElementId constant(const std::string& name) const {
    auto c = signature_->find_constant(name);
    if (!c) fail(ErrorKind::UnknownSymbol, "unknown constant '" + name + "'");
    return constants_[*c];
  }

  std::string label(SortId s, ElementId e) const {
    if (s < labels_.size() && e < labels_[s].size()) return labels_[s][e];
    return std::to_string(e);
  }

 private:
  friend class StructureBuilder;

  void check_args(const std::vector<SortId>& sorts, const std::vector<ElementId>& args,
                  const std::string& name) const {
    if (sorts.size() != args.size()) fail(ErrorKind::ArityMismatch, "wrong number of arguments for '" + name + "'");
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] >= sizes_[sorts[i]]) fail(ErrorKind::OutOfRange, "argument out of range for '" + name + "'");
    }
  }

  std::shared_ptr<const Signature> signature_;
  std::vector<std::uint64_t> sizes_;
  std::vector<RelationTable> relations_;
  std::vector<FunctionTable> functions_;
  std::vector<ElementId> constants_;
  std::vector<std::vector<std::string>> labels_;
};

// Collects tables and validates every invariant in build().
class StructureBuilder {
 public:
  StructureBuilder(Signature signature, std::vector<std::uint64_t> sizes)
      : signature_(std::make_shared<const Signature>(std::move(signature))), sizes_(std::move(sizes)) {
    const Signature& sig = *signature_;
    if (sizes_.size() != sig.sorts().size()) {
      fail(ErrorKind::InvariantViolation, "expected one universe size per sort");
    }
    for (std::size_t s = 0; s < sizes_.size(); ++s) {
      if (sizes_[s] == 0) fail(ErrorKind::InvariantViolation, "sort '" + sig.sorts()[s] + "' has an empty universe");
      if (sizes_[s] > kMaxSortSize) fail(ErrorKind::BudgetExceeded, "sort '" + sig.sorts()[s] + "' is too large");
    }
    tuples_.resize(sig.relations().size());
    predicates_.resize(sig.relations().size());
    function_values_.resize(sig.functions().size());
    function_maps_.resize(sig.functions().size());
    function_set_.assign(sig.functions().size(), false);
    constants_.assign(sig.constants().size(), 0);
    constant_set_.assign(sig.constants().size(), false);
  }

  const Signature& signature() const { return *signature_; }

  StructureBuilder& add_tuple(const std::string& relation, std::vector<ElementId> tuple) {
    return add_tuple(relation_id(relation), std::move(tuple));
  }

  StructureBuilder& add_tuple(SymbolId r, std::vector<ElementId> tuple) {
    const auto& sym = signature_->relations().at(r);
    if (tuple.size() != sym.args.size()) {
      fail(ErrorKind::InvariantViolation, "tuple of wrong arity in relation '" + sym.name + "'");
    }
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (tuple[i] >= sizes_[sym.args[i]]) {
        fail(ErrorKind::InvariantViolation, "tuple element " + std::to_string(tuple[i]) + " out of bounds in relation '" +
                                                sym.name + "'");
      }
    }
    tuples_[r].push_back(std::move(tuple));
    return *this;
  }

  StructureBuilder& set_relation_predicate(const std::string& relation, RelationTable::Predicate predicate) {
    predicates_[relation_id(relation)] = std::move(predicate);
    return *this;
  }

  // Row-major table over the argument domain.
  StructureBuilder& set_function_table(const std::string& function, std::vector<ElementId> values) {
    const SymbolId f = function_id(function);
    const auto& sym = signature_->functions()[f];
    const std::uint64_t cells = detail::checked_product(domain_of(sym.args));
    if (values.size() != cells) {
      fail(ErrorKind::InvariantViolation, "function '" + function + "' is not total on its domain");
    }
    for (ElementId v : values) {
      if (v >= sizes_[sym.result]) fail(ErrorKind::InvariantViolation, "function '" + function + "' value out of bounds");
    }
    function_values_[f] = std::move(values);
    function_maps_[f] = nullptr;
    function_set_[f] = true;
    return *this;
  }

  StructureBuilder& set_function(const std::string& function, FunctionTable::Map map) {
    const SymbolId f = function_id(function);
    function_maps_[f] = std::move(map);
    function_values_[f].clear();
    function_set_[f] = true;
    return *this;
  }

  StructureBuilder& set_constant(const std::string& name, ElementId value) {
    auto c = signature_->find_constant(name);
    if (!c) fail(ErrorKind::UnknownSymbol, "unknown constant '" + name + "'");
    if (value >= sizes_[signature_->constants()[*c].sort]) {
      fail(ErrorKind::InvariantViolation, "constant '" + name + "' out of bounds");
    }
    constants_[*c] = value;
    constant_set_[*c] = true;
    return *this;
  }

  StructureBuilder& set_labels(SortId s, std::vector<std::string> labels) {
    if (labels_.size() <= s) labels_.resize(s + 1);
    labels_[s] = std::move(labels);
    return *this;
  }

  FiniteStructure build() {
    FiniteStructure m;
    m.signature_ = signature_;
    m.sizes_ = sizes_;
    const Signature& sig = *signature_;
    for (std::size_t r = 0; r < sig.relations().size(); ++r) {
      auto domain = domain_of(sig.relations()[r].args);
      if (predicates_[r]) {
        if (!tuples_[r].empty()) fail(ErrorKind::InvariantViolation, "relation has both tuples and a predicate");
        m.relations_.push_back(RelationTable::computed(std::move(domain), predicates_[r]));
      } else {
        m.relations_.push_back(RelationTable::from_tuples(std::move(domain), std::move(tuples_[r])));
      }
    }
    for (std::size_t f = 0; f < sig.functions().size(); ++f) {
      if (!function_set_[f]) fail(ErrorKind::InvariantViolation, "function '" + sig.functions()[f].name + "' has no table");
      auto domain = domain_of(sig.functions()[f].args);
      if (function_maps_[f]) {
        m.functions_.push_back(FunctionTable::computed(std::move(domain), function_maps_[f]));
      } else {
        m.functions_.push_back(FunctionTable::from_table(std::move(domain), std::move(function_values_[f])));
      }
    }
    for (std::size_t c = 0; c < sig.constants().size(); ++c) {
      if (!constant_set_[c]) fail(ErrorKind::InvariantViolation, "constant '" + sig.constants()[c].name + "' has no value");
    }
    m.constants_ = constants_;
    m.labels_ = labels_;
    return m;
  }

 private:
  SymbolId relation_id(const std::string& name) const {
    auto r = signature_->find_relation(name);
    if (!r) fail(ErrorKind::UnknownSymbol, "unknown relation '" + name + "'");
    return *r;
  }

  SymbolId function_id(const std::string& name) const {
    auto f = signature_->find_function(name);
    if (!f) fail(ErrorKind::UnknownSymbol, "unknown function '" + name + "'");
    return *f;
  }

  std::vector<std::uint64_t> domain_of(const std::vector<SortId>& sorts) const {
    std::vector<std::uint64_t> d;
    for (SortId s : sorts) d.push_back(sizes_[s]);
    return d;
  }

  std::shared_ptr<const Signature> signature_;
  std::vector<std::uint64_t> sizes_;
  std::vector<std::vector<std::vector<ElementId>>> tuples_;
  std::vector<RelationTable::Predicate> predicates_;
  std::vector<std::vector<ElementId>> function_values_;
  std::vector<FunctionTable::Map> function_maps_;
  std::vector<bool> function_set_;
  std::vector<ElementId> constants_;
  std::vector<bool> constant_set_;
  std::vector<std::vector<std::string>> labels_;
};

}  // namespace pfdim

#endif  // PFDIM_STRUCTURE_HPP
