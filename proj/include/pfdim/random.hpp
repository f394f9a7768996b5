#ifndef PFDIM_RANDOM_HPP
#define PFDIM_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pfdim/formula.hpp"
#include "pfdim/signature.hpp"
#include "pfdim/structure.hpp"

namespace pfdim {

// Two sorts and one symbol of each kind:
//   S, K; P(S), E(S,S), Q(K); f: S -> S, g: S -> K; c: S, d: K.
inline Signature random_test_signature() {
  Signature sig;
  const SortId s = sig.add_sort("S");
  const SortId k = sig.add_sort("K");
  sig.add_relation("P", {s});
  sig.add_relation("E", {s, s});
  sig.add_relation("Q", {k});
  sig.add_function("f", {s}, s);
  sig.add_function("g", {s}, k);
  sig.add_constant("c", s);
  sig.add_constant("d", k);
  return sig;
}

struct RandomStructureOptions {
  std::uint64_t max_s = 200;
  std::uint64_t max_k = 4;
};

// A structure over random_test_signature() with random tables.
inline FiniteStructure random_structure(std::mt19937_64& rng, const RandomStructureOptions& opt = {}) {
  const Signature sig = random_test_signature();
  const std::uint64_t ns = 1 + rng() % opt.max_s;
  const std::uint64_t nk = 1 + rng() % opt.max_k;
  StructureBuilder b(sig, {ns, nk});
  std::uniform_real_distribution<double> unit(0, 1);
  const double pd = unit(rng);
  const double ed = unit(rng) * 0.5;
  for (std::uint64_t a = 0; a < ns; ++a) {
    if (unit(rng) < pd) b.add_tuple("P", {static_cast<ElementId>(a)});
    for (std::uint64_t c = 0; c < ns; ++c) {
      if (unit(rng) < ed) b.add_tuple("E", {static_cast<ElementId>(a), static_cast<ElementId>(c)});
    }
  }
  for (std::uint64_t a = 0; a < nk; ++a) {
    if (rng() % 2) b.add_tuple("Q", {static_cast<ElementId>(a)});
  }
  std::vector<ElementId> f(ns), g(ns);
  for (std::uint64_t a = 0; a < ns; ++a) {
    f[a] = static_cast<ElementId>(rng() % ns);
    g[a] = static_cast<ElementId>(rng() % nk);
  }
  b.set_function_table("f", std::move(f)).set_function_table("g", std::move(g));
  b.set_constant("c", static_cast<ElementId>(rng() % ns)).set_constant("d", static_cast<ElementId>(rng() % nk));
  return b.build();
}

struct RandomFormulaOptions {
  // Free variables the formula may mention, with their sorts.
  std::vector<FreeVariable> variables = {{"x", "S"}, {"y", "S"}};
  unsigned max_depth = 4;
  unsigned max_quantifiers = 1;
  unsigned max_term_depth = 2;
};

namespace detail {

class FormulaGenerator {
 public:
  FormulaGenerator(std::mt19937_64& rng, const RandomFormulaOptions& opt) : rng_(rng), opt_(opt), scope_(opt.variables) {}

  Formula formula(unsigned depth) {
    const unsigned roll = static_cast<unsigned>(rng_() % 10);
    if (depth == 0 || roll < 3) return atom();
    if (roll < 5) return Formula::negate(formula(depth - 1));
    if (roll < 8 || quantifiers_ >= opt_.max_quantifiers) {
      Formula a = formula(depth - 1);
      Formula b = formula(depth - 1);
      switch (rng_() % 3) {
        case 0: return Formula::conj(std::move(a), std::move(b));
        case 1: return Formula::disj(std::move(a), std::move(b));
        default: return Formula::implies(std::move(a), std::move(b));
      }
    }
    ++quantifiers_;
    const std::string sort = rng_() % 3 ? "S" : "K";
    const std::string name = "z" + std::to_string(fresh_++);
    scope_.push_back({name, sort});
    Formula body = formula(depth - 1);
    scope_.pop_back();
    return rng_() % 2 ? Formula::exists(name, sort, std::move(body)) : Formula::forall(name, sort, std::move(body));
  }

 private:
  Term term(const std::string& sort, unsigned depth) {
    std::vector<const FreeVariable*> vars;
    for (const auto& v : scope_) {
      if (v.sort == sort) vars.push_back(&v);
    }
    const unsigned roll = static_cast<unsigned>(rng_() % 10);
    if (depth > 0 && roll < 3) {
      return sort == "S" ? Term::apply("f", "S", {term("S", depth - 1)}) : Term::apply("g", "K", {term("S", depth - 1)});
    }
    if (vars.empty() || roll < 4) return Term::constant(sort == "S" ? "c" : "d", sort);
    const auto* v = vars[rng_() % vars.size()];
    return Term::var(v->name, v->sort);
  }

  Formula atom() {
    const unsigned d = opt_.max_term_depth;
    switch (rng_() % 5) {
      case 0: return Formula::rel("P", {term("S", d)});
      case 1: return Formula::rel("E", {term("S", d), term("S", d)});
      case 2: return Formula::rel("Q", {term("K", d)});
      case 3: return Formula::eq(term("S", d), term("S", d));
      default: return Formula::eq(term("K", d), term("K", d));
    }
  }

  std::mt19937_64& rng_;
  const RandomFormulaOptions& opt_;
  std::vector<FreeVariable> scope_;
  unsigned quantifiers_ = 0;
  unsigned fresh_ = 0;
};

}  // namespace detail

// A well-sorted formula over random_test_signature().
inline Formula random_formula(std::mt19937_64& rng, const RandomFormulaOptions& opt = {}) {
  return detail::FormulaGenerator(rng, opt).formula(opt.max_depth);
}

}  // namespace pfdim

#endif  // PFDIM_RANDOM_HPP
