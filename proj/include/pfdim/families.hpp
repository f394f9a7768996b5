#ifndef PFDIM_FAMILIES_HPP
#define PFDIM_FAMILIES_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pfdim/bigint.hpp"
#include "pfdim/block_structure.hpp"
#include "pfdim/engine.hpp"
#include "pfdim/error.hpp"
#include "pfdim/finite_field.hpp"
#include "pfdim/formula.hpp"
#include "pfdim/parser.hpp"
#include "pfdim/structure.hpp"

namespace pfdim {

struct FamilyParam {
  std::string name;
  long long default_value;
  std::string description;
};

struct FamilyInfo {
  std::string id;
  std::string description;
  std::vector<FamilyParam> params;
  std::vector<std::string> selectors;
  long long max_index;
};

inline const std::vector<FamilyInfo>& family_catalog() {
  static const std::vector<FamilyInfo> catalog = {
      {"earlyexample", "equivalence relation E with one class of size i^2 for each i = 1..k (index k)", {},
       {"class-<i>", "element-<id>"}, 4096},
      {"stablenonattainability", "equivalence relation E with one class of size n^i for each i = 1..n (index n)", {},
       {"class-rank-<t>", "element-<id>"}, 512},
      {"convsupersimple", "n^n elements with unary predicates P1..PK, |Pi| = n^(n-i) (index n)",
       {{"K", 8, "number of predicates"}}, {"element-<id>"}, 512},
      {"findelta", "equivalence relation E with exactly n classes of size n^i for each i = 1..n (index n)", {},
       {"class-size-<i>", "element-<id>"}, 128},
      {"rank2classes", "equivalence relation E with n classes of size n and one of size n^2 (index n)", {},
       {"big-class", "small-class", "element-<id>"}, 1 << 16},
  };
  return catalog;
}

inline const FamilyInfo& family_info(const std::string& id) {
  for (const auto& f : family_catalog()) {
    if (f.id == id) return f;
  }
  fail(ErrorKind::UnknownFamily, "unknown family '" + id + "'");
}

namespace detail {

inline Signature equivalence_signature() {
  Signature sig;
  const SortId s = sig.add_sort("S");
  sig.add_relation("E", {s, s});
  return sig;
}

inline BlockStructure equivalence_blocks(const std::vector<std::pair<std::string, BigInt>>& classes) {
  BlockStructure b(equivalence_signature());
  for (const auto& [label, size] : classes) b.add_block(0, label, size);
  b.set_relation("E", [](const std::uint32_t* blk) { return blk[0] == blk[1]; });
  return b;
}

inline long long parse_suffix(const std::string& text, const std::string& prefix) {
  if (text.rfind(prefix, 0) != 0 || text.size() == prefix.size()) return -1;
  long long v = 0;
  for (std::size_t i = prefix.size(); i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9' || v > (1LL << 40)) return -1;
    v = v * 10 + (text[i] - '0');
  }
  return v;
}

}  // namespace detail

// A named family with fixed generator parameters; generate(index) is
// deterministic.
class FamilyHandle {
 public:
  FamilyHandle(std::string id, std::map<std::string, long long> params = {})
      : info_(&family_info(id)), params_(std::move(params)) {
    for (const auto& [name, value] : params_) {
      bool known = false;
      for (const auto& p : info_->params) known = known || p.name == name;
      if (!known) fail(ErrorKind::InvalidArgument, "family '" + id + "' has no parameter '" + name + "'");
      (void)value;
    }
    if (info_->id == "convsupersimple" && (param("K") < 1 || param("K") > 64)) {
      fail(ErrorKind::OutOfRange, "K must lie in 1..64");
    }
  }

  const std::string& id() const { return info_->id; }
  const FamilyInfo& info() const { return *info_; }

  long long param(const std::string& name) const {
    auto it = params_.find(name);
    if (it != params_.end()) return it->second;
    for (const auto& p : info_->params) {
      if (p.name == name) return p.default_value;
    }
    fail(ErrorKind::InvalidArgument, "unknown parameter '" + name + "'");
  }

  // The structure at an index as interchangeable blocks.
  BlockStructure blocks(long long index) const {
    if (index < 1 || index > info_->max_index) {
      fail(ErrorKind::OutOfRange, "index " + std::to_string(index) + " outside 1.." + std::to_string(info_->max_index) +
                                      " for family '" + id() + "'");
    }
    const unsigned n = static_cast<unsigned>(index);
    const std::string& f = info_->id;
    std::vector<std::pair<std::string, BigInt>> classes;
    if (f == "earlyexample") {
      for (unsigned i = 1; i <= n; ++i) classes.emplace_back("class-" + std::to_string(i), BigInt(i) * i);
      return detail::equivalence_blocks(classes);
    }
    if (f == "stablenonattainability") {
      for (unsigned i = 1; i <= n; ++i) classes.emplace_back("size-n^" + std::to_string(i), pow(BigInt(n), i));
      return detail::equivalence_blocks(classes);
    }
    if (f == "findelta") {
      for (unsigned i = 1; i <= n; ++i) {
        for (unsigned c = 1; c <= n; ++c) {
          classes.emplace_back("size-n^" + std::to_string(i) + "-copy-" + std::to_string(c), pow(BigInt(n), i));
        }
      }
      return detail::equivalence_blocks(classes);
    }
    if (f == "rank2classes") {
      for (unsigned c = 1; c <= n; ++c) classes.emplace_back("small-" + std::to_string(c), BigInt(n));
      classes.emplace_back("big", BigInt(n) * n);
      return detail::equivalence_blocks(classes);
    }
    if (f == "convsupersimple") return convsupersimple_blocks(n, static_cast<unsigned>(param("K")));
    fail(ErrorKind::UnknownFamily, "unknown family '" + f + "'");
  }

  FiniteStructure generate(long long index, std::uint64_t max_elements = std::uint64_t{1} << 24) const {
    return blocks(index).materialize(max_elements);
  }

  BigInt universe_size(long long index) const { return blocks(index).sort_size(0); }

  // Resolves a named selector to an element at an index.
  BlockElement select(const std::string& selector, long long index) const {
    const BlockStructure b = blocks(index);
    const auto n = static_cast<long long>(index);
    const std::string& f = info_->id;
    auto failure = [&](const std::string& why) -> BlockElement {
      fail(ErrorKind::SelectorFailure, "selector '" + selector + "' at index " + std::to_string(index) + ": " + why);
    };
    if (long long id = detail::parse_suffix(selector, "element-"); id >= 0) {
      if (BigInt(id) >= b.sort_size(0)) return failure("element id outside the universe");
      auto [block, ordinal] = b.locate(0, BigInt(id));
      return {block, ordinal};
    }
    if (f == "earlyexample") {
      const long long i = detail::parse_suffix(selector, "class-");
      if (i < 1 || i > n) return failure("no such class");
      return {static_cast<std::uint32_t>(i - 1), 0};
    }
    if (f == "stablenonattainability") {
      // class-rank-t names the first element of the class of size n^(n-t).
      const long long t = detail::parse_suffix(selector, "class-rank-");
      if (t < 0 || t >= n) return failure("rank must lie in 0..n-1");
      return {static_cast<std::uint32_t>(n - t - 1), 0};
    }
    if (f == "findelta") {
      const long long i = detail::parse_suffix(selector, "class-size-");
      if (i < 1 || i > n) return failure("size exponent must lie in 1..n");
      return {static_cast<std::uint32_t>((i - 1) * n), 0};
    }
    if (f == "rank2classes") {
      if (selector == "big-class") return {static_cast<std::uint32_t>(n), 0};
      if (selector == "small-class") return {0, 0};
    }
    return failure("unknown selector for family '" + f + "'");
  }

  // Explicit id of a selected element in generate(index).
  ElementId select_id(const std::string& selector, long long index) const {
    const BlockElement e = select(selector, index);
    return blocks(index).id_of(0, e.block, e.ordinal).convert_to<ElementId>();
  }

 private:
  // Level j holds the elements satisfying exactly P1..Pj.
  static BlockStructure convsupersimple_blocks(unsigned n, unsigned k) {
    Signature sig;
    const SortId s = sig.add_sort("S");
    for (unsigned i = 1; i <= k; ++i) sig.add_relation("P" + std::to_string(i), {s});
    BlockStructure b(std::move(sig));
    auto levels = std::make_shared<std::vector<unsigned>>();
    for (unsigned j = 0; j <= n; ++j) {
      const BigInt size = j == n ? BigInt(1) : pow(BigInt(n), n - j) - pow(BigInt(n), n - j - 1);
      if (size == 0) continue;
      b.add_block(0, "level-" + std::to_string(j), size);
      levels->push_back(j);
    }
    for (unsigned i = 1; i <= k; ++i) {
      b.set_relation("P" + std::to_string(i), [levels, i](const std::uint32_t* blk) { return (*levels)[blk[0]] >= i; });
    }
    return b;
  }

  const FamilyInfo* info_;
  std::map<std::string, long long> params_;
};

struct CardinalitySequence {
  std::string family_id;
  std::string formula;
  std::string selector;
  std::vector<std::pair<long long, Count>> entries;
};

// Maps parameter variables to selector names, e.g. {"y": "class-rank-1"}.
using SelectorSpec = std::map<std::string, std::string>;

inline std::string describe(const SelectorSpec& spec) {
  std::string out;
  for (const auto& [var, sel] : spec) {
    if (!out.empty()) out += ",";
    out += var + "=" + sel;
  }
  return out;
}

// Counts over the variables not named in the selector spec, unless counted is
// given explicitly.
inline CardinalitySequence count_family(const Formula& f, const FamilyHandle& family, const std::vector<long long>& indices,
                                        const SelectorSpec& selectors, std::vector<std::string> counted = {},
                                        const EngineOptions& options = {}) {
  CardinalitySequence seq{family.id(), render_formula(f), describe(selectors), {}};
  if (counted.empty()) {
    for (const auto& v : free_variables(f)) {
      if (!selectors.count(v.name)) counted.push_back(v.name);
    }
  }
  long long previous = 0;
  for (long long index : indices) {
    if (index <= previous) fail(ErrorKind::InvalidArgument, "indices must be strictly increasing");
    previous = index;
    const BlockStructure b = family.blocks(index);
    BlockAssignment fixed;
    for (const auto& [var, sel] : selectors) {
      std::string sort = b.signature().sorts()[0];
      for (const auto& v : free_variables(f)) {
        if (v.name == var) sort = v.sort;
      }
      fixed[var] = BlockBinding{sort, family.select(sel, index)};
    }
    seq.entries.emplace_back(index, block_count(f, b, fixed, counted, options));
  }
  return seq;
}

// Structure for (Z/p^n Z)^m with addition, negation and zero. Ids are base-p^n
// digit vectors, first coordinate lowest.
inline FiniteStructure make_homocyclic(unsigned p, unsigned n, unsigned m, std::uint64_t max_order = 1u << 12) {
  if (p < 2 || !FiniteField::is_prime_power(p)) fail(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
  for (unsigned d = 2; d * d <= p; ++d) {
    if (p % d == 0) fail(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
  }
  if (n < 1 || m < 1) fail(ErrorKind::InvalidArgument, "n and m must be positive");
  const BigInt order_big = pow(BigInt(p), n * m);
  if (order_big > max_order) fail(ErrorKind::BudgetExceeded, "group order " + to_string(order_big) + " exceeds the size budget");
  const auto order = order_big.convert_to<std::uint64_t>();
  const auto mod = pow(BigInt(p), n).convert_to<std::uint64_t>();

  auto digits = [&](std::uint64_t id) {
    std::vector<std::uint64_t> d(m);
    for (unsigned i = 0; i < m; ++i) {
      d[i] = id % mod;
      id /= mod;
    }
    return d;
  };
  auto pack = [&](const std::vector<std::uint64_t>& d) {
    std::uint64_t id = 0;
    for (unsigned i = m; i-- > 0;) id = id * mod + d[i];
    return static_cast<ElementId>(id);
  };

  Signature sig;
  const SortId g = sig.add_sort("G");
  sig.add_function("add", {g, g}, g);
  sig.add_function("neg", {g}, g);
  sig.add_constant("zero", g);
  StructureBuilder builder(sig, {order});
  std::vector<ElementId> add(order * order), neg(order);
  std::vector<std::string> labels(order);
  for (std::uint64_t a = 0; a < order; ++a) {
    const auto da = digits(a);
    std::vector<std::uint64_t> dn(m);
    std::string label = "(";
    for (unsigned i = 0; i < m; ++i) {
      dn[i] = (mod - da[i]) % mod;
      label += (i ? "," : "") + std::to_string(da[i]);
    }
    labels[a] = label + ")";
    neg[a] = pack(dn);
    for (std::uint64_t b = 0; b < order; ++b) {
      const auto db = digits(b);
      std::vector<std::uint64_t> ds(m);
      for (unsigned i = 0; i < m; ++i) ds[i] = (da[i] + db[i]) % mod;
      add[a * order + b] = pack(ds);
    }
  }
  builder.set_function_table("add", std::move(add));
  builder.set_function_table("neg", std::move(neg));
  builder.set_constant("zero", 0);
  builder.set_labels(g, std::move(labels));
  return builder.build();
}

// Two-sorted structure (F, V) for V = F^dim over GF(q). Field operations fadd,
// fmul, fneg and constants fzero, fone; vector operations vadd, vneg, smul and
// constant vzero; theta1..theta<dim> assert linear independence.
inline FiniteStructure make_vector_space(unsigned q, unsigned dim) {
  auto field = std::make_shared<const FiniteField>(q);
  if (dim < 1 || dim > 6) fail(ErrorKind::OutOfRange, "dimension must lie in 1..6");
  const std::uint64_t vsize = pow(BigInt(q), dim).convert_to<std::uint64_t>();
  if (vsize > (std::uint64_t{1} << 20)) fail(ErrorKind::BudgetExceeded, "vector space too large");

  Signature sig;
  const SortId fs = sig.add_sort("F");
  const SortId vs = sig.add_sort("V");
  sig.add_function("fadd", {fs, fs}, fs);
  sig.add_function("fmul", {fs, fs}, fs);
  sig.add_function("fneg", {fs}, fs);
  sig.add_function("vadd", {vs, vs}, vs);
  sig.add_function("vneg", {vs}, vs);
  sig.add_function("smul", {fs, vs}, vs);
  sig.add_constant("fzero", fs);
  sig.add_constant("fone", fs);
  sig.add_constant("vzero", vs);
  for (unsigned k = 1; k <= dim; ++k) sig.add_relation("theta" + std::to_string(k), std::vector<SortId>(k, vs));

  StructureBuilder builder(sig, {q, vsize});
  std::vector<ElementId> fadd(q * q), fmul(q * q), fneg(q);
  for (unsigned a = 0; a < q; ++a) {
    fneg[a] = field->neg(a);
    for (unsigned b = 0; b < q; ++b) {
      fadd[a * q + b] = field->add(a, b);
      fmul[a * q + b] = field->mul(a, b);
    }
  }
  builder.set_function_table("fadd", fadd).set_function_table("fmul", fmul).set_function_table("fneg", fneg);

  auto vadd = [field, q, dim](const ElementId* a) {
    return static_cast<ElementId>(vector_id(vec_add(*field, vector_from_id(a[0], q, dim), vector_from_id(a[1], q, dim)), q));
  };
  auto vneg = [field, q, dim](const ElementId* a) {
    return static_cast<ElementId>(vector_id(vec_scale(*field, field->neg(1), vector_from_id(a[0], q, dim)), q));
  };
  auto smul = [field, q, dim](const ElementId* a) {
    return static_cast<ElementId>(vector_id(vec_scale(*field, a[0], vector_from_id(a[1], q, dim)), q));
  };
  auto tabulate = [&](const std::string& name, std::uint64_t rows, std::uint64_t cols, auto fn) {
    if (rows * cols > kFunctionTableCells) {
      builder.set_function(name, fn);
      return;
    }
    std::vector<ElementId> table(rows * cols);
    for (std::uint64_t a = 0; a < rows; ++a) {
      for (std::uint64_t b = 0; b < cols; ++b) {
        const ElementId args[2] = {static_cast<ElementId>(a), static_cast<ElementId>(b)};
        table[a * cols + b] = fn(args);
      }
    }
    builder.set_function_table(name, std::move(table));
  };
  tabulate("vadd", vsize, vsize, vadd);
  tabulate("vneg", vsize, 1, vneg);
  tabulate("smul", q, vsize, smul);
  builder.set_constant("fzero", 0).set_constant("fone", 1).set_constant("vzero", 0);

  for (unsigned k = 1; k <= dim; ++k) {
    auto theta = [field, q, dim, k](const ElementId* args) {
      std::vector<FieldVector> rows;
      for (unsigned i = 0; i < k; ++i) rows.push_back(vector_from_id(args[i], q, dim));
      return rank_of(*field, rows) == k;
    };
    const BigInt cells = pow(BigInt(vsize), k);
    const std::string name = "theta" + std::to_string(k);
    if (cells <= kDenseRelationCells / 4) {
      RelationTable::computed(std::vector<std::uint64_t>(k, vsize), theta)
          .for_each_tuple([&](const std::vector<ElementId>& t) { builder.add_tuple(name, t); });
    } else {
      builder.set_relation_predicate(name, theta);
    }
  }
  std::vector<std::string> vlabels(vsize);
  for (std::uint64_t v = 0; v < vsize; ++v) {
    const auto digits = vector_from_id(v, q, dim);
    std::string label = "(";
    for (unsigned i = 0; i < dim; ++i) label += (i ? "," : "") + std::to_string(digits[i]);
    vlabels[v] = label + ")";
  }
  builder.set_labels(vs, std::move(vlabels));
  return builder.build();
}

}  // namespace pfdim

#endif  // PFDIM_FAMILIES_HPP
