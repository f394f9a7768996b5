#ifndef PFDIM_FORMULA_HPP
#define PFDIM_FORMULA_HPP

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pfdim/signature.hpp"

namespace pfdim {

struct Term {
  enum class Kind { Var, Const, Apply };

  Kind kind = Kind::Var;
  std::string name;
  // Resolved sort name. Variables carry the sort of their binder, or the sort
  // inferred for a free variable.
  std::string sort;
  std::vector<Term> args;

  static Term var(std::string name, std::string sort) { return {Kind::Var, std::move(name), std::move(sort), {}}; }
  static Term constant(std::string name, std::string sort) {
    return {Kind::Const, std::move(name), std::move(sort), {}};
  }
  static Term apply(std::string fn, std::string result_sort, std::vector<Term> args) {
    return {Kind::Apply, std::move(fn), std::move(result_sort), std::move(args)};
  }

  friend bool operator==(const Term&, const Term&) = default;
};

struct Formula {
  enum class Kind { Rel, Eq, Not, And, Or, Implies, Exists, Forall };

  Kind kind = Kind::Rel;
  // Relation name for Rel, bound variable for quantifiers.
  std::string name;
  // Sort of the bound variable for quantifiers.
  std::string sort;
  std::vector<Term> terms;
  std::vector<Formula> children;

  static Formula rel(std::string name, std::vector<Term> terms) {
    return {Kind::Rel, std::move(name), {}, std::move(terms), {}};
  }
  static Formula eq(Term a, Term b) { return {Kind::Eq, {}, {}, {std::move(a), std::move(b)}, {}}; }
  static Formula negate(Formula f) { return {Kind::Not, {}, {}, {}, {std::move(f)}}; }
  static Formula conj(Formula a, Formula b) { return binary(Kind::And, std::move(a), std::move(b)); }
  static Formula disj(Formula a, Formula b) { return binary(Kind::Or, std::move(a), std::move(b)); }
  static Formula implies(Formula a, Formula b) { return binary(Kind::Implies, std::move(a), std::move(b)); }
  static Formula exists(std::string var, std::string sort, Formula body) {
    return {Kind::Exists, std::move(var), std::move(sort), {}, {std::move(body)}};
  }
  static Formula forall(std::string var, std::string sort, Formula body) {
    return {Kind::Forall, std::move(var), std::move(sort), {}, {std::move(body)}};
  }
  static Formula binary(Kind k, Formula a, Formula b) { return {k, {}, {}, {}, {std::move(a), std::move(b)}}; }

  bool is_quantifier() const { return kind == Kind::Exists || kind == Kind::Forall; }
  bool is_binary() const { return kind == Kind::And || kind == Kind::Or || kind == Kind::Implies; }

  friend bool operator==(const Formula&, const Formula&) = default;
};

struct FreeVariable {
  std::string name;
  std::string sort;
  friend bool operator==(const FreeVariable&, const FreeVariable&) = default;
};

namespace detail {

inline void collect_term_vars(const Term& t, const std::vector<std::string>& bound, std::vector<FreeVariable>& out,
                              std::set<std::string>& seen) {
  if (t.kind == Term::Kind::Var) {
    for (const auto& b : bound) {
      if (b == t.name) return;
    }
    if (seen.insert(t.name).second) out.push_back({t.name, t.sort});
    return;
  }
  for (const auto& a : t.args) collect_term_vars(a, bound, out, seen);
}

inline void collect_free(const Formula& f, std::vector<std::string>& bound, std::vector<FreeVariable>& out,
                         std::set<std::string>& seen) {
  if (f.is_quantifier()) {
    bound.push_back(f.name);
    collect_free(f.children[0], bound, out, seen);
    bound.pop_back();
    return;
  }
  for (const auto& t : f.terms) collect_term_vars(t, bound, out, seen);
  for (const auto& c : f.children) collect_free(c, bound, out, seen);
}

}  // namespace detail

// Free variables in first-occurrence order, left to right.
inline std::vector<FreeVariable> free_variables(const Formula& f) {
  std::vector<FreeVariable> out;
  std::vector<std::string> bound;
  std::set<std::string> seen;
  detail::collect_free(f, bound, out, seen);
  return out;
}

enum class SortDiagnosticKind { UnknownSymbol, ArityMismatch, SortMismatch };

inline std::string_view to_string(SortDiagnosticKind kind) {
  switch (kind) {
    case SortDiagnosticKind::UnknownSymbol: return "unknown-symbol";
    case SortDiagnosticKind::ArityMismatch: return "arity-mismatch";
    case SortDiagnosticKind::SortMismatch: return "sort-mismatch";
  }
  return "sort-error";
}

struct SortDiagnostic {
  SortDiagnosticKind kind;
  std::string message;
};

namespace detail {

struct SortChecker {
  const Signature& sig;
  std::vector<std::pair<std::string, std::string>> scope;
  std::vector<std::pair<std::string, std::string>> free_sorts;

  std::optional<SortDiagnostic> term(const Term& t) {
    switch (t.kind) {
      case Term::Kind::Var: {
        if (!sig.find_sort(t.sort)) {
          return SortDiagnostic{SortDiagnosticKind::UnknownSymbol, "variable '" + t.name + "' has unknown sort '" + t.sort + "'"};
        }
        for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
          if (it->first == t.name) {
            if (it->second != t.sort) {
              return SortDiagnostic{SortDiagnosticKind::SortMismatch,
                                    "variable '" + t.name + "' is bound with sort '" + it->second + "' but used as '" + t.sort + "'"};
            }
            return std::nullopt;
          }
        }
        for (const auto& [name, sort] : free_sorts) {
          if (name == t.name) {
            if (sort != t.sort) {
              return SortDiagnostic{SortDiagnosticKind::SortMismatch,
                                    "free variable '" + t.name + "' used with sorts '" + sort + "' and '" + t.sort + "'"};
            }
            return std::nullopt;
          }
        }
        free_sorts.emplace_back(t.name, t.sort);
        return std::nullopt;
      }
      case Term::Kind::Const: {
        auto c = sig.find_constant(t.name);
        if (!c) return SortDiagnostic{SortDiagnosticKind::UnknownSymbol, "unknown constant '" + t.name + "'"};
        if (sig.sort_name(sig.constants()[*c].sort) != t.sort) {
          return SortDiagnostic{SortDiagnosticKind::SortMismatch, "constant '" + t.name + "' annotated with wrong sort"};
        }
        return std::nullopt;
      }
      case Term::Kind::Apply: {
        auto f = sig.find_function(t.name);
        if (!f) return SortDiagnostic{SortDiagnosticKind::UnknownSymbol, "unknown function '" + t.name + "'"};
        const auto& sym = sig.functions()[*f];
        if (sym.args.size() != t.args.size()) {
          return SortDiagnostic{SortDiagnosticKind::ArityMismatch,
                                "function '" + t.name + "' expects " + std::to_string(sym.args.size()) + " arguments, got " +
                                    std::to_string(t.args.size())};
        }
        for (std::size_t i = 0; i < t.args.size(); ++i) {
          if (auto d = term(t.args[i])) return d;
          if (t.args[i].sort != sig.sort_name(sym.args[i])) {
            return SortDiagnostic{SortDiagnosticKind::SortMismatch, "argument " + std::to_string(i + 1) + " of '" + t.name +
                                                                        "' has sort '" + t.args[i].sort + "', expected '" +
                                                                        sig.sort_name(sym.args[i]) + "'"};
          }
        }
        if (sig.sort_name(sym.result) != t.sort) {
          return SortDiagnostic{SortDiagnosticKind::SortMismatch, "application of '" + t.name + "' annotated with wrong sort"};
        }
        return std::nullopt;
      }
    }
    return std::nullopt;
  }

  std::optional<SortDiagnostic> formula(const Formula& f) {
    switch (f.kind) {
      case Formula::Kind::Rel: {
        auto r = sig.find_relation(f.name);
        if (!r) return SortDiagnostic{SortDiagnosticKind::UnknownSymbol, "unknown relation '" + f.name + "'"};
        const auto& sym = sig.relations()[*r];
        if (sym.args.size() != f.terms.size()) {
          return SortDiagnostic{SortDiagnosticKind::ArityMismatch,
                                "relation '" + f.name + "' expects " + std::to_string(sym.args.size()) + " arguments, got " +
                                    std::to_string(f.terms.size())};
        }
        for (std::size_t i = 0; i < f.terms.size(); ++i) {
          if (auto d = term(f.terms[i])) return d;
          if (f.terms[i].sort != sig.sort_name(sym.args[i])) {
            return SortDiagnostic{SortDiagnosticKind::SortMismatch, "argument " + std::to_string(i + 1) + " of '" + f.name +
                                                                        "' has sort '" + f.terms[i].sort + "', expected '" +
                                                                        sig.sort_name(sym.args[i]) + "'"};
          }
        }
        return std::nullopt;
      }
      case Formula::Kind::Eq: {
        if (f.terms.size() != 2) return SortDiagnostic{SortDiagnosticKind::ArityMismatch, "equality needs two terms"};
        for (const auto& t : f.terms) {
          if (auto d = term(t)) return d;
        }
        if (f.terms[0].sort != f.terms[1].sort) {
          return SortDiagnostic{SortDiagnosticKind::SortMismatch,
                                "equality between sorts '" + f.terms[0].sort + "' and '" + f.terms[1].sort + "'"};
        }
        return std::nullopt;
      }
      case Formula::Kind::Exists:
      case Formula::Kind::Forall: {
        if (!sig.find_sort(f.sort)) {
          return SortDiagnostic{SortDiagnosticKind::UnknownSymbol, "unknown sort '" + f.sort + "'"};
        }
        scope.emplace_back(f.name, f.sort);
        auto d = formula(f.children.at(0));
        scope.pop_back();
        return d;
      }
      default:
        for (const auto& c : f.children) {
          if (auto d = formula(c)) return d;
        }
        return std::nullopt;
    }
  }
};

}  // namespace detail

// Returns the first offending node in a left-to-right walk, or nullopt.
inline std::optional<SortDiagnostic> sort_check(const Formula& f, const Signature& sig) {
  detail::SortChecker checker{sig, {}, {}};
  return checker.formula(f);
}

inline std::string render_term(const Term& t) {
  if (t.kind != Term::Kind::Apply) return t.name;
  std::string out = t.name + "(";
  for (std::size_t i = 0; i < t.args.size(); ++i) {
    if (i) out += ", ";
    out += render_term(t.args[i]);
  }
  return out + ")";
}

inline std::string render_formula(const Formula& f);

namespace detail {

// A quantifier scopes as far right as possible, so as a binary operand it
// needs its own parentheses.
inline std::string render_operand(const Formula& f) {
  if (f.is_quantifier()) return "(" + render_formula(f) + ")";
  return render_formula(f);
}

}  // namespace detail

// Canonical text: atoms bare, every compound fully parenthesized.
inline std::string render_formula(const Formula& f) {
  switch (f.kind) {
    case Formula::Kind::Rel: {
      std::string out = f.name + "(";
      for (std::size_t i = 0; i < f.terms.size(); ++i) {
        if (i) out += ", ";
        out += render_term(f.terms[i]);
      }
      return out + ")";
    }
    case Formula::Kind::Eq:
      return render_term(f.terms[0]) + " = " + render_term(f.terms[1]);
    case Formula::Kind::Not:
      return "!(" + render_formula(f.children[0]) + ")";
    case Formula::Kind::And:
      return "(" + detail::render_operand(f.children[0]) + " & " + detail::render_operand(f.children[1]) + ")";
    case Formula::Kind::Or:
      return "(" + detail::render_operand(f.children[0]) + " | " + detail::render_operand(f.children[1]) + ")";
    case Formula::Kind::Implies:
      return "(" + detail::render_operand(f.children[0]) + " -> " + detail::render_operand(f.children[1]) + ")";
    case Formula::Kind::Exists:
      return "exists " + f.name + ":" + f.sort + ". (" + render_formula(f.children[0]) + ")";
    case Formula::Kind::Forall:
      return "forall " + f.name + ":" + f.sort + ". (" + render_formula(f.children[0]) + ")";
  }
  return {};
}

}  // namespace pfdim

#endif  // PFDIM_FORMULA_HPP
