#ifndef PFDIM_ENGINE_HPP
#define PFDIM_ENGINE_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "pfdim/bigint.hpp"
#include "pfdim/error.hpp"
#include "pfdim/formula.hpp"
#include "pfdim/structure.hpp"

namespace pfdim {

inline constexpr std::uint64_t kDefaultBudget = 1'000'000'000ULL;

// PFDIM_BUDGET overrides the default visit budget when set to a positive integer.
inline std::uint64_t default_budget() {
  if (const char* env = std::getenv("PFDIM_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return kDefaultBudget;
}

inline unsigned default_workers() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

struct EngineOptions {
  unsigned workers = default_workers();
  std::uint64_t budget = default_budget();
};

struct Binding {
  std::string sort;
  ElementId value = 0;
};

class Assignment {
 public:
  Assignment() = default;
  Assignment(std::initializer_list<std::pair<const std::string, Binding>> init) : values_(init) {}

  Assignment& set(const std::string& name, const std::string& sort, ElementId value) {
    values_[name] = Binding{sort, value};
    return *this;
  }

  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const Binding& at(const std::string& name) const {
    auto it = values_.find(name);
    if (it == values_.end()) fail(ErrorKind::MissingAssignment, "no value for variable '" + name + "'");
    return it->second;
  }
  const std::map<std::string, Binding>& values() const { return values_; }

 private:
  std::map<std::string, Binding> values_;
};

// Shared visit counter. Workers batch their increments to keep contention low.
class VisitBudget {
 public:
  explicit VisitBudget(std::uint64_t limit) : limit_(limit) {}

  void charge(std::uint64_t n) {
    const std::uint64_t total = used_.fetch_add(n, std::memory_order_relaxed) + n;
    if (total > limit_) {
      exhausted_.store(true, std::memory_order_relaxed);
      fail(ErrorKind::BudgetExceeded, "assignment budget of " + std::to_string(limit_) + " visits exceeded");
    }
    if (exhausted_.load(std::memory_order_relaxed)) fail(ErrorKind::BudgetExceeded, "assignment budget exceeded");
  }

  std::uint64_t used() const { return used_.load(); }

 private:
  std::uint64_t limit_;
  std::atomic<std::uint64_t> used_{0};
  std::atomic<bool> exhausted_{false};
};

class LocalBudget {
 public:
  explicit LocalBudget(VisitBudget& shared) : shared_(shared) {}
  ~LocalBudget() {
    if (pending_ && !std::uncaught_exceptions()) {
      try {
        shared_.charge(pending_);
      } catch (...) {
      }
    }
  }

  void tick() {
    if (++pending_ >= kBatch) flush();
  }
  void flush() {
    const std::uint64_t n = pending_;
    pending_ = 0;
    shared_.charge(n);
  }

 private:
  static constexpr std::uint64_t kBatch = 4096;
  VisitBudget& shared_;
  std::uint64_t pending_ = 0;
};

// A formula compiled against one structure: variables become slots in a flat
// environment, symbols become table indices.
class CompiledFormula {
 public:
  struct CTerm {
    enum class Kind { Slot, Const, Apply } kind = Kind::Slot;
    std::uint32_t index = 0;
    std::vector<CTerm> args;
  };

  struct Node {
    Formula::Kind kind;
    std::uint32_t symbol = 0;
    std::uint32_t slot = 0;
    std::uint64_t range = 0;
    bool plain_slots = false;
    std::vector<CTerm> terms;
    std::vector<std::uint32_t> slots;
    std::vector<std::uint32_t> children;
  };

  // Slots 0..free.size()-1 hold the given free variables in order.
  CompiledFormula(const Formula& f, const FiniteStructure& m, const std::vector<FreeVariable>& free) : m_(m) {
    std::vector<std::pair<std::string, std::uint32_t>> scope;
    for (const auto& v : free) {
      scope.emplace_back(v.name, slot_count_);
      ++slot_count_;
    }
    root_ = compile(f, scope);
  }

  std::uint32_t slot_count() const { return slot_count_; }

  bool eval(ElementId* env, LocalBudget& budget) const { return eval_node(root_, env, budget); }

 private:
  std::uint32_t compile(const Formula& f, std::vector<std::pair<std::string, std::uint32_t>>& scope) {
    const Signature& sig = m_.signature();
    Node node;
    node.kind = f.kind;
    switch (f.kind) {
      case Formula::Kind::Rel: {
        node.symbol = *sig.find_relation(f.name);
        node.plain_slots = true;
        for (const auto& t : f.terms) {
          node.terms.push_back(compile_term(t, scope));
          if (node.terms.back().kind != CTerm::Kind::Slot) node.plain_slots = false;
          node.slots.push_back(node.terms.back().index);
        }
        break;
      }
      case Formula::Kind::Eq:
        for (const auto& t : f.terms) node.terms.push_back(compile_term(t, scope));
        break;
      case Formula::Kind::Exists:
      case Formula::Kind::Forall: {
        node.slot = slot_count_++;
        node.range = m_.sort_size(sig.sort(f.sort));
        scope.emplace_back(f.name, node.slot);
        node.children.push_back(compile(f.children[0], scope));
        scope.pop_back();
        break;
      }
      default:
        for (const auto& c : f.children) node.children.push_back(compile(c, scope));
    }
    nodes_.push_back(std::move(node));
    return static_cast<std::uint32_t>(nodes_.size() - 1);
  }

  CTerm compile_term(const Term& t, const std::vector<std::pair<std::string, std::uint32_t>>& scope) const {
    const Signature& sig = m_.signature();
    CTerm c;
    switch (t.kind) {
      case Term::Kind::Var: {
        for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
          if (it->first == t.name) {
            c.kind = CTerm::Kind::Slot;
            c.index = it->second;
            return c;
          }
        }
        fail(ErrorKind::MissingAssignment, "no value for variable '" + t.name + "'");
      }
      case Term::Kind::Const:
        c.kind = CTerm::Kind::Const;
        c.index = m_.constant(*sig.find_constant(t.name));
        return c;
      case Term::Kind::Apply:
        c.kind = CTerm::Kind::Apply;
        c.index = *sig.find_function(t.name);
        for (const auto& a : t.args) c.args.push_back(compile_term(a, scope));
        return c;
    }
    return c;
  }

  ElementId eval_term(const CTerm& t, const ElementId* env) const {
    switch (t.kind) {
      case CTerm::Kind::Slot: return env[t.index];
      case CTerm::Kind::Const: return t.index;
      case CTerm::Kind::Apply: {
        std::array<ElementId, 16> small{};
        std::vector<ElementId> large;
        ElementId* args = small.data();
        if (t.args.size() > small.size()) {
          large.resize(t.args.size());
          args = large.data();
        }
        for (std::size_t i = 0; i < t.args.size(); ++i) args[i] = eval_term(t.args[i], env);
        return m_.function(t.index).apply(args);
      }
    }
    return 0;
  }

  bool eval_node(std::uint32_t id, ElementId* env, LocalBudget& budget) const {
    const Node& n = nodes_[id];
    switch (n.kind) {
      case Formula::Kind::Rel: {
        std::array<ElementId, 16> small{};
        std::vector<ElementId> large;
        ElementId* args = small.data();
        if (n.terms.size() > small.size()) {
          large.resize(n.terms.size());
          args = large.data();
        }
        if (n.plain_slots) {
          for (std::size_t i = 0; i < n.slots.size(); ++i) args[i] = env[n.slots[i]];
        } else {
          for (std::size_t i = 0; i < n.terms.size(); ++i) args[i] = eval_term(n.terms[i], env);
        }
        return m_.relation(n.symbol).holds(args);
      }
      case Formula::Kind::Eq:
        return eval_term(n.terms[0], env) == eval_term(n.terms[1], env);
      case Formula::Kind::Not:
        return !eval_node(n.children[0], env, budget);
      case Formula::Kind::And:
        return eval_node(n.children[0], env, budget) && eval_node(n.children[1], env, budget);
      case Formula::Kind::Or:
        return eval_node(n.children[0], env, budget) || eval_node(n.children[1], env, budget);
      case Formula::Kind::Implies:
        return !eval_node(n.children[0], env, budget) || eval_node(n.children[1], env, budget);
      case Formula::Kind::Exists:
        for (std::uint64_t v = 0; v < n.range; ++v) {
          budget.tick();
          env[n.slot] = static_cast<ElementId>(v);
          if (eval_node(n.children[0], env, budget)) return true;
        }
        return false;
      case Formula::Kind::Forall:
        for (std::uint64_t v = 0; v < n.range; ++v) {
          budget.tick();
          env[n.slot] = static_cast<ElementId>(v);
          if (!eval_node(n.children[0], env, budget)) return false;
        }
        return true;
    }
    return false;
  }

  const FiniteStructure& m_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
  std::uint32_t slot_count_ = 0;
};

namespace detail {

inline void require_well_sorted(const Formula& f, const Signature& sig) {
  if (auto d = sort_check(f, sig)) {
    switch (d->kind) {
      case SortDiagnosticKind::UnknownSymbol: fail(ErrorKind::UnknownSymbol, d->message);
      case SortDiagnosticKind::ArityMismatch: fail(ErrorKind::ArityMismatch, d->message);
      case SortDiagnosticKind::SortMismatch: fail(ErrorKind::SortMismatch, d->message);
    }
  }
}

inline ElementId checked_value(const FiniteStructure& m, const FreeVariable& v, const Binding& b) {
  if (b.sort != v.sort) {
    fail(ErrorKind::SortMismatch, "variable '" + v.name + "' has sort '" + v.sort + "' but is assigned a '" + b.sort + "' element");
  }
  if (b.value >= m.sort_size(m.signature().sort(v.sort))) {
    fail(ErrorKind::OutOfRange, "value " + std::to_string(b.value) + " for '" + v.name + "' is outside its universe");
  }
  return b.value;
}

}  // namespace detail

inline bool evaluate(const Formula& f, const FiniteStructure& m, const Assignment& a,
                     const EngineOptions& options = {}) {
  detail::require_well_sorted(f, m.signature());
  const auto free = free_variables(f);
  CompiledFormula compiled(f, m, free);
  std::vector<ElementId> env(compiled.slot_count(), 0);
  for (std::size_t i = 0; i < free.size(); ++i) env[i] = detail::checked_value(m, free[i], a.at(free[i].name));
  VisitBudget budget(options.budget);
  LocalBudget local(budget);
  const bool result = compiled.eval(env.data(), local);
  local.flush();
  return result;
}

// A counted variable is "name" or "name:Sort"; the sort is needed only when
// the variable does not occur free in the formula.
inline FreeVariable resolve_counted(const std::string& spec, const std::vector<FreeVariable>& free) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  std::string sort = colon == std::string::npos ? std::string() : spec.substr(colon + 1);
  for (const auto& v : free) {
    if (v.name == name) {
      if (!sort.empty() && sort != v.sort) fail(ErrorKind::SortMismatch, "counted variable '" + name + "' declared with the wrong sort");
      return v;
    }
  }
  if (sort.empty()) fail(ErrorKind::InvalidArgument, "counted variable '" + name + "' does not occur free; give it as name:Sort");
  return {name, sort};
}

inline Count count(const Formula& f, const FiniteStructure& m, const Assignment& fixed,
                   const std::vector<std::string>& counted_vars, const EngineOptions& options = {}) {
  const Signature& sig = m.signature();
  detail::require_well_sorted(f, sig);
  const auto free = free_variables(f);

  std::vector<FreeVariable> counted;
  for (const auto& spec : counted_vars) {
    FreeVariable v = resolve_counted(spec, free);
    if (fixed.contains(v.name)) fail(ErrorKind::VariableOverlap, "variable '" + v.name + "' is both fixed and counted");
    for (const auto& c : counted) {
      if (c.name == v.name) fail(ErrorKind::VariableOverlap, "variable '" + v.name + "' counted twice");
    }
    if (!sig.find_sort(v.sort)) fail(ErrorKind::UnknownSymbol, "unknown sort '" + v.sort + "'");
    counted.push_back(v);
  }

  // Slot layout: counted variables first, then fixed ones, then binders.
  std::vector<FreeVariable> layout = counted;
  std::vector<ElementId> fixed_values;
  for (const auto& v : free) {
    bool is_counted = false;
    for (const auto& c : counted) is_counted = is_counted || c.name == v.name;
    if (is_counted) continue;
    if (!fixed.contains(v.name)) fail(ErrorKind::MissingAssignment, "free variable '" + v.name + "' is neither fixed nor counted");
    layout.push_back(v);
    fixed_values.push_back(detail::checked_value(m, v, fixed.at(v.name)));
  }

  CompiledFormula compiled(f, m, layout);
  std::vector<std::uint64_t> ranges;
  for (const auto& c : counted) ranges.push_back(m.sort_size(sig.sort(c.sort)));

  VisitBudget budget(options.budget);
  auto base_env = [&] {
    std::vector<ElementId> env(compiled.slot_count(), 0);
    for (std::size_t i = 0; i < fixed_values.size(); ++i) env[counted.size() + i] = fixed_values[i];
    return env;
  };

  if (counted.empty()) {
    auto env = base_env();
    LocalBudget local(budget);
    local.tick();
    const bool truth = compiled.eval(env.data(), local);
    local.flush();
    return Count(BigInt(truth ? 1 : 0));
  }

  // Each worker claims values of the first counted variable and enumerates the
  // remaining counted variables as an odometer.
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex error_mutex;
  std::exception_ptr error;
  const std::uint64_t first_range = ranges[0];
  const unsigned workers = static_cast<unsigned>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(std::max(1u, options.workers), first_range)));
  std::vector<std::uint64_t> partial(workers, 0);

  auto work = [&](unsigned w) {
    try {
      auto env = base_env();
      LocalBudget local(budget);
      std::uint64_t hits = 0;
      for (;;) {
        if (stop.load(std::memory_order_relaxed)) break;
        const std::uint64_t v0 = next.fetch_add(1);
        if (v0 >= first_range) break;
        env[0] = static_cast<ElementId>(v0);
        for (std::size_t i = 1; i < ranges.size(); ++i) env[i] = 0;
        for (;;) {
          local.tick();
          if (compiled.eval(env.data(), local)) ++hits;
          bool done = true;
          for (std::size_t i = ranges.size(); i-- > 1;) {
            if (++env[i] < ranges[i]) {
              done = false;
              break;
            }
            env[i] = 0;
          }
          if (done) break;
        }
      }
      local.flush();
      partial[w] = hits;
    } catch (...) {
      stop.store(true);
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < workers; ++w) threads.emplace_back(work, w);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  BigInt total = 0;
  for (auto p : partial) total += p;
  return Count(total);
}

}  // namespace pfdim

#endif  // PFDIM_ENGINE_HPP
