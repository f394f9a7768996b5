#ifndef PFDIM_BLOCK_STRUCTURE_HPP
#define PFDIM_BLOCK_STRUCTURE_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "pfdim/bigint.hpp"
#include "pfdim/engine.hpp"
#include "pfdim/error.hpp"
#include "pfdim/formula.hpp"
#include "pfdim/signature.hpp"
#include "pfdim/structure.hpp"

namespace pfdim {

// A relational structure given by a partition of each sort into blocks, where
// every relation depends only on the blocks of its arguments. Elements of one
// block are interchangeable, so counts can be computed exactly from block
// sizes even when the universe is astronomically large.
class BlockStructure {
 public:
  using BlockPredicate = std::function<bool(const std::uint32_t* blocks)>;

  struct Block {
    std::string label;
    BigInt size;
  };

  explicit BlockStructure(Signature sig) : sig_(std::make_shared<const Signature>(std::move(sig))) {
    if (!sig_->functions().empty() || !sig_->constants().empty()) {
      fail(ErrorKind::InvalidArgument, "block structures are purely relational");
    }
    blocks_.resize(sig_->sorts().size());
    offsets_.resize(sig_->sorts().size());
    predicates_.resize(sig_->relations().size());
  }

  BlockStructure& add_block(SortId s, std::string label, BigInt size) {
    if (size <= 0) fail(ErrorKind::InvariantViolation, "blocks must be nonempty");
    BigInt start = offsets_[s].empty() ? BigInt(0) : offsets_[s].back() + blocks_[s].back().size;
    offsets_[s].push_back(start);
    blocks_[s].push_back({std::move(label), std::move(size)});
    return *this;
  }

  BlockStructure& set_relation(const std::string& name, BlockPredicate predicate) {
    auto r = sig_->find_relation(name);
    if (!r) fail(ErrorKind::UnknownSymbol, "unknown relation '" + name + "'");
    predicates_[*r] = std::move(predicate);
    return *this;
  }

  const Signature& signature() const { return *sig_; }
  const std::vector<Block>& blocks(SortId s) const { return blocks_.at(s); }

  BigInt sort_size(SortId s) const {
    if (blocks_[s].empty()) return 0;
    return offsets_[s].back() + blocks_[s].back().size;
  }

  BigInt total_size() const {
    BigInt total = 0;
    for (std::size_t s = 0; s < blocks_.size(); ++s) total += sort_size(static_cast<SortId>(s));
    return total;
  }

  bool holds(SymbolId r, const std::uint32_t* blocks) const { return predicates_[r](blocks); }

  void validate() const {
    for (std::size_t s = 0; s < blocks_.size(); ++s) {
      if (blocks_[s].empty()) fail(ErrorKind::InvariantViolation, "sort '" + sig_->sorts()[s] + "' has no blocks");
    }
    for (std::size_t r = 0; r < predicates_.size(); ++r) {
      if (!predicates_[r]) fail(ErrorKind::InvariantViolation, "relation '" + sig_->relations()[r].name + "' has no predicate");
    }
  }

  // Explicit ids run through the blocks of a sort in order.
  BigInt id_of(SortId s, std::uint32_t block, const BigInt& ordinal) const {
    if (block >= blocks_[s].size() || ordinal < 0 || ordinal >= blocks_[s][block].size) {
      fail(ErrorKind::OutOfRange, "element outside its block");
    }
    return offsets_[s][block] + ordinal;
  }

  std::pair<std::uint32_t, BigInt> locate(SortId s, const BigInt& id) const {
    if (id < 0 || id >= sort_size(s)) fail(ErrorKind::OutOfRange, "element id outside the universe");
    auto it = std::upper_bound(offsets_[s].begin(), offsets_[s].end(), id);
    const auto block = static_cast<std::uint32_t>(std::distance(offsets_[s].begin(), it) - 1);
    return {block, id - offsets_[s][block]};
  }

  FiniteStructure materialize(std::uint64_t max_elements = std::uint64_t{1} << 24) const {
    validate();
    if (total_size() > max_elements) {
      fail(ErrorKind::BudgetExceeded, "structure has " + to_string(total_size()) + " elements, above the materialization limit");
    }
    std::vector<std::uint64_t> sizes;
    std::vector<std::vector<std::uint32_t>> block_of(blocks_.size());
    for (std::size_t s = 0; s < blocks_.size(); ++s) {
      sizes.push_back(sort_size(static_cast<SortId>(s)).convert_to<std::uint64_t>());
      for (std::size_t b = 0; b < blocks_[s].size(); ++b) {
        const auto n = blocks_[s][b].size.convert_to<std::uint64_t>();
        block_of[s].insert(block_of[s].end(), n, static_cast<std::uint32_t>(b));
      }
    }
    StructureBuilder builder(*sig_, sizes);
    auto shared_blocks = std::make_shared<const std::vector<std::vector<std::uint32_t>>>(std::move(block_of));
    for (std::size_t r = 0; r < sig_->relations().size(); ++r) {
      const auto& sym = sig_->relations()[r];
      BlockPredicate pred = predicates_[r];
      std::vector<SortId> arg_sorts = sym.args;
      if (arg_sorts.size() > 16) fail(ErrorKind::InvalidArgument, "block relations support arity up to 16");
      auto lifted = [shared_blocks, pred, arg_sorts](const ElementId* args) {
        std::array<std::uint32_t, 16> blk{};
        for (std::size_t i = 0; i < arg_sorts.size(); ++i) blk[i] = (*shared_blocks)[arg_sorts[i]][args[i]];
        return pred(blk.data());
      };
      std::vector<std::uint64_t> domain;
      for (SortId s : arg_sorts) domain.push_back(sizes[s]);
      const std::uint64_t cells = detail::checked_product(domain);
      if (cells != 0 && cells <= (std::uint64_t{1} << 22)) {
        RelationTable::computed(domain, lifted).for_each_tuple(
            [&](const std::vector<ElementId>& t) { builder.add_tuple(static_cast<SymbolId>(r), t); });
      } else {
        builder.set_relation_predicate(sym.name, lifted);
      }
    }
    return builder.build();
  }

 private:
  std::shared_ptr<const Signature> sig_;
  std::vector<std::vector<Block>> blocks_;
  std::vector<std::vector<BigInt>> offsets_;
  std::vector<BlockPredicate> predicates_;
};

struct BlockElement {
  std::uint32_t block = 0;
  BigInt ordinal = 0;
  friend bool operator==(const BlockElement&, const BlockElement&) = default;
};

struct BlockBinding {
  std::string sort;
  BlockElement element;
};

using BlockAssignment = std::map<std::string, BlockBinding>;

namespace detail {

// Interprets a formula over a block structure. Each variable holds an element
// (block, uid); uids distinguish elements, and any element not yet mentioned
// is "fresh" and represented once per block.
class BlockEvaluator {
 public:
  struct Elem {
    std::uint32_t block = 0;
    std::uint64_t uid = 0;
  };

  BlockEvaluator(const BlockStructure& b, const Formula& f, const std::vector<FreeVariable>& layout)
      : b_(b), sig_(b.signature()) {
    b_.validate();
    std::vector<std::pair<std::string, std::uint32_t>> scope;
    for (const auto& v : layout) {
      scope.emplace_back(v.name, slot_count_);
      slot_sorts_.push_back(sig_.sort(v.sort));
      ++slot_count_;
    }
    root_ = compile(f, scope);
    const std::size_t sorts = sig_.sorts().size();
    context_.resize(sorts);
    used_.resize(sorts);
    for (std::size_t s = 0; s < sorts; ++s) used_[s].assign(b_.blocks(static_cast<SortId>(s)).size(), 0);
    env_.resize(slot_count_);
  }

  std::uint32_t slot_sort(std::uint32_t slot) const { return slot_sorts_[slot]; }
  const std::vector<std::vector<Elem>>& context() const { return context_; }
  const std::vector<std::vector<std::uint64_t>>& used() const { return used_; }

  // Places a named element in a slot; repeated names share a uid.
  void bind_named(std::uint32_t slot, const BlockElement& e) {
    const SortId s = slot_sorts_[slot];
    if (e.block >= b_.blocks(s).size() || e.ordinal < 0 || e.ordinal >= b_.blocks(s)[e.block].size) {
      fail(ErrorKind::OutOfRange, "parameter outside its block");
    }
    auto key = std::make_tuple(s, e.block, e.ordinal.str());
    auto it = named_.find(key);
    if (it == named_.end()) {
      Elem elem{e.block, next_uid_++};
      named_.emplace(key, elem);
      push(s, elem);
      env_[slot] = elem;
    } else {
      env_[slot] = it->second;
    }
  }

  void set(std::uint32_t slot, Elem e) { env_[slot] = e; }
  Elem fresh(std::uint32_t block) { return Elem{block, next_uid_++}; }
  void push(SortId s, Elem e) {
    context_[s].push_back(e);
    ++used_[s][e.block];
  }
  void pop(SortId s) {
    --used_[s][context_[s].back().block];
    context_[s].pop_back();
  }
  BigInt spare(SortId s, std::uint32_t block) const { return b_.blocks(s)[block].size - used_[s][block]; }

  bool eval(LocalBudget& budget) { return eval_node(root_, budget); }

 private:
  struct Node {
    Formula::Kind kind;
    std::uint32_t symbol = 0;
    std::uint32_t slot = 0;
    SortId sort = 0;
    std::vector<std::uint32_t> slots;
    std::vector<std::uint32_t> children;
  };

  std::uint32_t slot_of(const Term& t, const std::vector<std::pair<std::string, std::uint32_t>>& scope) const {
    if (t.kind != Term::Kind::Var) fail(ErrorKind::InvalidArgument, "block structures have no function or constant terms");
    for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
      if (it->first == t.name) return it->second;
    }
    fail(ErrorKind::MissingAssignment, "no value for variable '" + t.name + "'");
  }

  std::uint32_t compile(const Formula& f, std::vector<std::pair<std::string, std::uint32_t>>& scope) {
    Node node;
    node.kind = f.kind;
    switch (f.kind) {
      case Formula::Kind::Rel:
        node.symbol = *sig_.find_relation(f.name);
        for (const auto& t : f.terms) node.slots.push_back(slot_of(t, scope));
        break;
      case Formula::Kind::Eq:
        for (const auto& t : f.terms) node.slots.push_back(slot_of(t, scope));
        break;
      case Formula::Kind::Exists:
      case Formula::Kind::Forall:
        node.slot = slot_count_++;
        node.sort = sig_.sort(f.sort);
        slot_sorts_.push_back(node.sort);
        scope.emplace_back(f.name, node.slot);
        node.children.push_back(compile(f.children[0], scope));
        scope.pop_back();
        break;
      default:
        for (const auto& c : f.children) node.children.push_back(compile(c, scope));
    }
    nodes_.push_back(std::move(node));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  // Tries every element of the context, then one fresh element per block with
  // room to spare. Returns true as soon as body == target.
  bool search(const Node& n, bool target, LocalBudget& budget) {
    const SortId s = n.sort;
    const std::size_t existing = context_[s].size();
    for (std::size_t i = 0; i < existing; ++i) {
      budget.tick();
      env_[n.slot] = context_[s][i];
      if (eval_node(n.children[0], budget) == target) return true;
    }
    for (std::uint32_t blk = 0; blk < b_.blocks(s).size(); ++blk) {
      if (spare(s, blk) <= 0) continue;
      budget.tick();
      const Elem e = fresh(blk);
      push(s, e);
      env_[n.slot] = e;
      const bool hit = eval_node(n.children[0], budget) == target;
      pop(s);
      if (hit) return true;
    }
    return false;
  }

  bool eval_node(std::uint32_t id, LocalBudget& budget) {
    const Node& n = nodes_[id];
    switch (n.kind) {
      case Formula::Kind::Rel: {
        std::array<std::uint32_t, 16> blocks{};
        for (std::size_t i = 0; i < n.slots.size(); ++i) blocks[i] = env_[n.slots[i]].block;
        return b_.holds(n.symbol, blocks.data());
      }
      case Formula::Kind::Eq:
        return env_[n.slots[0]].uid == env_[n.slots[1]].uid;
      case Formula::Kind::Not:
        return !eval_node(n.children[0], budget);
      case Formula::Kind::And:
        return eval_node(n.children[0], budget) && eval_node(n.children[1], budget);
      case Formula::Kind::Or:
        return eval_node(n.children[0], budget) || eval_node(n.children[1], budget);
      case Formula::Kind::Implies:
        return !eval_node(n.children[0], budget) || eval_node(n.children[1], budget);
      case Formula::Kind::Exists:
        return search(n, true, budget);
      case Formula::Kind::Forall:
        return !search(n, false, budget);
    }
    return false;
  }

  const BlockStructure& b_;
  const Signature& sig_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
  std::uint32_t slot_count_ = 0;
  std::vector<SortId> slot_sorts_;
  std::vector<Elem> env_;
  std::vector<std::vector<Elem>> context_;
  std::vector<std::vector<std::uint64_t>> used_;
  std::map<std::tuple<SortId, std::uint32_t, std::string>, Elem> named_;
  std::uint64_t next_uid_ = 0;
};

// One way to extend the counted prefix: reuse a context element or take a
// fresh element of a block.
struct BlockChoice {
  bool fresh = false;
  std::size_t index = 0;  // context position, or block when fresh
};

inline BigInt block_count_rec(BlockEvaluator& ev, std::size_t level, std::size_t counted, LocalBudget& budget) {
  if (level == counted) {
    budget.tick();
    return ev.eval(budget) ? 1 : 0;
  }
  const auto slot = static_cast<std::uint32_t>(level);
  const SortId s = ev.slot_sort(slot);
  BigInt total = 0;
  const std::size_t existing = ev.context()[s].size();
  for (std::size_t i = 0; i < existing; ++i) {
    ev.set(slot, ev.context()[s][i]);
    total += block_count_rec(ev, level + 1, counted, budget);
  }
  const std::size_t nblocks = ev.used()[s].size();
  for (std::uint32_t blk = 0; blk < nblocks; ++blk) {
    BigInt mult = ev.spare(s, blk);
    if (mult <= 0) continue;
    auto e = ev.fresh(blk);
    ev.push(s, e);
    ev.set(slot, e);
    BigInt sub = block_count_rec(ev, level + 1, counted, budget);
    ev.pop(s);
    if (sub != 0) total += mult * sub;
  }
  return total;
}

}  // namespace detail

// Exact count of the counted-variable tuples satisfying f, with the other free
// variables fixed to named block elements.
inline Count block_count(const Formula& f, const BlockStructure& b, const BlockAssignment& fixed,
                         const std::vector<std::string>& counted_vars, const EngineOptions& options = {}) {
  const Signature& sig = b.signature();
  detail::require_well_sorted(f, sig);
  const auto free = free_variables(f);
  std::vector<FreeVariable> layout;
  for (const auto& spec : counted_vars) {
    FreeVariable v = resolve_counted(spec, free);
    if (fixed.count(v.name)) fail(ErrorKind::VariableOverlap, "variable '" + v.name + "' is both fixed and counted");
    for (const auto& c : layout) {
      if (c.name == v.name) fail(ErrorKind::VariableOverlap, "variable '" + v.name + "' counted twice");
    }
    layout.push_back(v);
  }
  const std::size_t counted = layout.size();
  std::vector<BlockElement> fixed_values;
  for (const auto& v : free) {
    bool is_counted = false;
    for (std::size_t i = 0; i < counted; ++i) is_counted = is_counted || layout[i].name == v.name;
    if (is_counted) continue;
    auto it = fixed.find(v.name);
    if (it == fixed.end()) fail(ErrorKind::MissingAssignment, "free variable '" + v.name + "' is neither fixed nor counted");
    if (it->second.sort != v.sort) fail(ErrorKind::SortMismatch, "variable '" + v.name + "' assigned an element of the wrong sort");
    layout.push_back(v);
    fixed_values.push_back(it->second.element);
  }

  VisitBudget shared(options.budget);
  auto prepare = [&](detail::BlockEvaluator& ev) {
    for (std::size_t i = 0; i < fixed_values.size(); ++i) ev.bind_named(static_cast<std::uint32_t>(counted + i), fixed_values[i]);
  };

  if (counted == 0 || options.workers <= 1) {
    detail::BlockEvaluator ev(b, f, layout);
    prepare(ev);
    LocalBudget local(shared);
    BigInt total = detail::block_count_rec(ev, 0, counted, local);
    local.flush();
    return Count(total);
  }

  // Fan out over the choices for the first counted variable.
  detail::BlockEvaluator probe(b, f, layout);
  prepare(probe);
  const SortId s0 = probe.slot_sort(0);
  std::vector<detail::BlockChoice> choices;
  for (std::size_t i = 0; i < probe.context()[s0].size(); ++i) choices.push_back({false, i});
  for (std::size_t blk = 0; blk < probe.used()[s0].size(); ++blk) {
    if (probe.spare(s0, static_cast<std::uint32_t>(blk)) > 0) choices.push_back({true, blk});
  }
  std::vector<BigInt> partial(choices.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto work = [&] {
    try {
      detail::BlockEvaluator ev(b, f, layout);
      prepare(ev);
      LocalBudget local(shared);
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= choices.size()) break;
        const auto& ch = choices[c];
        if (!ch.fresh) {
          ev.set(0, ev.context()[s0][ch.index]);
          partial[c] = detail::block_count_rec(ev, 1, counted, local);
        } else {
          const auto blk = static_cast<std::uint32_t>(ch.index);
          const BigInt mult = ev.spare(s0, blk);
          auto e = ev.fresh(blk);
          ev.push(s0, e);
          ev.set(0, e);
          partial[c] = mult * detail::block_count_rec(ev, 1, counted, local);
          ev.pop(s0);
        }
      }
      local.flush();
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
      next.store(choices.size());
    }
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(options.workers, std::max<std::size_t>(1, choices.size())));
  std::vector<std::thread> threads;
  for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  BigInt total = 0;
  for (const auto& p : partial) total += p;
  return Count(total);
}

// Parameter tuples up to block-preserving symmetry: every tuple of elements of
// the given sorts is the image of exactly one returned tuple under such a
// symmetry. Each representative comes with the number of tuples it stands for.
struct BlockParameterClass {
  std::vector<BlockElement> elements;
  BigInt multiplicity;
};

inline std::vector<BlockParameterClass> block_parameter_classes(const BlockStructure& b, const std::vector<SortId>& sorts) {
  std::vector<BlockParameterClass> out;
  std::vector<BlockElement> current;
  std::vector<std::vector<std::uint64_t>> used(b.signature().sorts().size());
  for (std::size_t s = 0; s < used.size(); ++s) used[s].assign(b.blocks(static_cast<SortId>(s)).size(), 0);
  std::vector<std::pair<SortId, BlockElement>> chosen;
  std::function<void(std::size_t, BigInt)> rec = [&](std::size_t i, BigInt mult) {
    if (i == sorts.size()) {
      out.push_back({current, mult});
      return;
    }
    const SortId s = sorts[i];
    std::vector<BlockElement> seen;
    for (const auto& [cs, e] : chosen) {
      if (cs != s || std::find(seen.begin(), seen.end(), e) != seen.end()) continue;
      seen.push_back(e);
      current.push_back(e);
      rec(i + 1, mult);
      current.pop_back();
    }
    for (std::uint32_t blk = 0; blk < used[s].size(); ++blk) {
      const BigInt spare = b.blocks(s)[blk].size - used[s][blk];
      if (spare <= 0) continue;
      BlockElement e{blk, BigInt(used[s][blk])};
      ++used[s][blk];
      chosen.emplace_back(s, e);
      current.push_back(e);
      rec(i + 1, mult * spare);
      current.pop_back();
      chosen.pop_back();
      --used[s][blk];
    }
  };
  rec(0, 1);
  return out;
}

}  // namespace pfdim

#endif  // PFDIM_BLOCK_STRUCTURE_HPP
