#ifndef PFDIM_VS_ORACLE_HPP
#define PFDIM_VS_ORACLE_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pfdim/bigint.hpp"
#include "pfdim/error.hpp"
#include "pfdim/finite_field.hpp"

namespace pfdim {

// Polynomial in V and F with rational coefficients; terms keyed by (vPow, fPow).
class VFPolynomial {
 public:
  VFPolynomial() = default;

  static VFPolynomial constant(Rational c) { return monomial(0, 0, std::move(c)); }
  static VFPolynomial monomial(unsigned v_pow, unsigned f_pow, Rational c = 1) {
    VFPolynomial p;
    p.add_term(v_pow, f_pow, std::move(c));
    return p;
  }

  void add_term(unsigned v_pow, unsigned f_pow, const Rational& c) {
    if (c == 0) return;
    auto& slot = terms_[{v_pow, f_pow}];
    slot += c;
    if (slot == 0) terms_.erase({v_pow, f_pow});
  }

  const std::map<std::pair<unsigned, unsigned>, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  VFPolynomial operator+(const VFPolynomial& o) const {
    VFPolynomial r = *this;
    for (const auto& [k, c] : o.terms_) r.add_term(k.first, k.second, c);
    return r;
  }

  VFPolynomial operator-(const VFPolynomial& o) const {
    VFPolynomial r = *this;
    for (const auto& [k, c] : o.terms_) r.add_term(k.first, k.second, -c);
    return r;
  }

  VFPolynomial operator*(const VFPolynomial& o) const {
    VFPolynomial r;
    for (const auto& [a, ca] : terms_) {
      for (const auto& [b, cb] : o.terms_) r.add_term(a.first + b.first, a.second + b.second, ca * cb);
    }
    return r;
  }

  bool operator==(const VFPolynomial& o) const { return terms_ == o.terms_; }

  Rational evaluate(const BigInt& v, const BigInt& f) const {
    Rational total = 0;
    for (const auto& [k, c] : terms_) total += c * Rational(pow(v, k.first) * pow(f, k.second));
    return total;
  }

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto [vp, fp] = it->first;
      Rational c = it->second;
      const bool negative = c < 0;
      if (negative) c = -c;
      out += out.empty() ? (negative ? "-" : "") : (negative ? " - " : " + ");
      std::string mono;
      if (vp) mono += vp == 1 ? "V" : "V^" + std::to_string(vp);
      if (fp) mono += (mono.empty() ? "" : "*") + (fp == 1 ? std::string("F") : "F^" + std::to_string(fp));
      if (mono.empty()) {
        out += pfdim::to_string(c);
      } else {
        if (c != 1) out += pfdim::to_string(c) + "*";
        out += mono;
      }
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [k, c] : terms_) {
      terms.push_back({{"vPow", k.first},
                       {"fPow", k.second},
                       {"coeff", {pfdim::to_string(boost::multiprecision::numerator(c)), pfdim::to_string(boost::multiprecision::denominator(c))}}});
    }
    return {{"terms", terms}};
  }

  static VFPolynomial from_json(const nlohmann::json& j) {
    VFPolynomial p;
    try {
      for (const auto& t : j.at("terms")) {
        const auto& c = t.at("coeff");
        Rational coeff = c.is_array() ? Rational(parse_bigint(c.at(0).get<std::string>()), parse_bigint(c.at(1).get<std::string>()))
                                      : parse_rational(c.get<std::string>());
        p.add_term(t.at("vPow").get<unsigned>(), t.at("fPow").get<unsigned>(), coeff);
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Schema, std::string("malformed polynomial: ") + e.what());
    }
    return p;
  }

 private:
  std::map<std::pair<unsigned, unsigned>, Rational> terms_;
};

// Ambient space F_q^dim.
struct VectorSpaceShape {
  unsigned q = 2;
  unsigned dim = 1;

  BigInt v_size() const { return pow(BigInt(q), dim); }
};

inline std::size_t span_rank(const FiniteField& f, const std::vector<FieldVector>& vectors) { return rank_of(f, vectors); }

// Rank of vectors given by element ids of make_vector_space(q, dim).
inline std::size_t span_rank(unsigned q, unsigned dim, const std::vector<std::uint64_t>& ids) {
  FiniteField f(q);
  std::vector<FieldVector> vs;
  const BigInt size = pow(BigInt(q), dim);
  for (auto id : ids) {
    if (BigInt(id) >= size) fail(ErrorKind::InvalidArgument, "vector id outside the ambient space");
    vs.push_back(vector_from_id(id, q, dim));
  }
  return rank_of(f, vs);
}

// w_i and w'_j as field-coefficient combinations of parameter vectors.
struct VectorTermSpec {
  std::vector<std::vector<unsigned>> w;
  std::vector<std::vector<unsigned>> w_prime;
};

namespace detail {

inline FieldVector combine(const FiniteField& f, const std::vector<unsigned>& coeffs, const std::vector<FieldVector>& params,
                           unsigned dim) {
  if (coeffs.size() > params.size()) fail(ErrorKind::MissingAssignment, "term uses more parameter vectors than supplied");
  FieldVector out(dim, 0);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] >= f.order()) fail(ErrorKind::InvalidArgument, "coefficient outside the field");
    if (params[i].size() != dim) fail(ErrorKind::InvalidArgument, "vectors from different ambient spaces");
    out = vec_add(f, out, vec_scale(f, coeffs[i], params[i]));
  }
  return out;
}

}  // namespace detail

enum class ThetaGuard { Independent, ShiftDependent, Degenerate, NoShiftIndependent, NoShiftDegenerate };

inline std::string to_string(ThetaGuard g) {
  switch (g) {
    case ThetaGuard::Independent: return "w-bar w'-bar independent";
    case ThetaGuard::ShiftDependent: return "differences independent, w-bar w'-bar dependent";
    case ThetaGuard::Degenerate: return "differences dependent";
    case ThetaGuard::NoShiftIndependent: return "m = 0, w' independent";
    case ThetaGuard::NoShiftDegenerate: return "m = 0, w' dependent";
  }
  return "?";
}

struct ThetaCount {
  ThetaGuard guard = ThetaGuard::Degenerate;
  std::size_t span_dim = 0;
  Count first{BigInt(0)};
  Count second{BigInt(0)};
  Count total{BigInt(0)};
  VFPolynomial first_poly;
  VFPolynomial second_poly;
  VFPolynomial poly;
};

// Solutions u of theta_{m+m'}(u+w_1, ..., u+w_m, w'_1, ..., w'_m'). The first
// disjunct is u outside <w w'> with no relation of coefficient sum 0; the
// second is u in <w w'> with coefficient sum other than -1 (w w' independent).
inline ThetaCount count_theta_case(const FiniteField& f, unsigned dim, const VectorTermSpec& spec,
                                   const std::vector<FieldVector>& params) {
  std::vector<FieldVector> w, wp;
  for (const auto& c : spec.w) w.push_back(detail::combine(f, c, params, dim));
  for (const auto& c : spec.w_prime) wp.push_back(detail::combine(f, c, params, dim));
  const std::size_t m = w.size(), mp = wp.size();
  const BigInt q = f.order();
  const VFPolynomial V = VFPolynomial::monomial(1, 0);
  auto F = [](std::size_t k) { return VFPolynomial::monomial(0, static_cast<unsigned>(k)); };
  auto value = [&](std::size_t k) { return pow(q, static_cast<unsigned>(k)); };
  const BigInt v_size = pow(q, dim);

  ThetaCount out;
  std::vector<FieldVector> all = w;
  all.insert(all.end(), wp.begin(), wp.end());
  out.span_dim = rank_of(f, all);
  if (m == 0) {
    const bool independent = out.span_dim == mp;
    out.guard = independent ? ThetaGuard::NoShiftIndependent : ThetaGuard::NoShiftDegenerate;
    if (independent) {
      out.first = Count(v_size);
      out.first_poly = V;
    }
    out.total = out.first;
    out.poly = out.first_poly;
    return out;
  }
  std::vector<FieldVector> diffs;
  for (std::size_t i = 1; i < m; ++i) diffs.push_back(vec_sub(f, w[i], w[0]));
  diffs.insert(diffs.end(), wp.begin(), wp.end());
  const bool diffs_independent = rank_of(f, diffs) == diffs.size();
  const std::size_t n = m + mp;
  if (!diffs_independent) {
    out.guard = ThetaGuard::Degenerate;
    return out;
  }
  if (out.span_dim == n) {
    out.guard = ThetaGuard::Independent;
    out.first = Count(v_size - value(n));
    out.first_poly = V - F(n);
    out.second = Count(value(n) - value(n - 1));
    out.second_poly = F(n) - F(n - 1);
  } else {
    out.guard = ThetaGuard::ShiftDependent;
    out.first = Count(v_size - value(n - 1));
    out.first_poly = V - F(n - 1);
  }
  out.total = Count(out.first.value + out.second.value);
  out.poly = out.first_poly + out.second_poly;
  return out;
}

// Direct enumeration of theta solutions over V.
inline Count brute_force_theta(const FiniteField& f, unsigned dim, const VectorTermSpec& spec,
                               const std::vector<FieldVector>& params) {
  std::vector<FieldVector> w, wp;
  for (const auto& c : spec.w) w.push_back(detail::combine(f, c, params, dim));
  for (const auto& c : spec.w_prime) wp.push_back(detail::combine(f, c, params, dim));
  const auto v_size = pow(BigInt(f.order()), dim).convert_to<std::uint64_t>();
  std::uint64_t hits = 0;
  for (std::uint64_t id = 0; id < v_size; ++id) {
    const FieldVector u = vector_from_id(id, f.order(), dim);
    std::vector<FieldVector> vs;
    for (const auto& x : w) vs.push_back(vec_add(f, u, x));
    vs.insert(vs.end(), wp.begin(), wp.end());
    hits += rank_of(f, vs) == vs.size();
  }
  return Count(BigInt(hits));
}

// offset + <span>.
struct AffineCoset {
  FieldVector offset;
  std::vector<FieldVector> span;
};

// u in (U_1 & ... & U_l) minus (V_1 | ... | V_k); l = 0 means the ambient space.
struct CosetCountSpec {
  std::vector<AffineCoset> include;
  std::vector<AffineCoset> exclude;

  std::string kind() const {
    if (include.empty() && exclude.size() == 1) {
      const bool linear = std::all_of(exclude[0].offset.begin(), exclude[0].offset.end(), [](unsigned c) { return c == 0; });
      if (linear) return "complement-of-span";
    }
    if (exclude.empty()) return "affine-slice";
    return "coset-difference";
  }
};

struct CosetCount {
  Count count{BigInt(0)};
  VFPolynomial poly;
};

namespace detail {

// Equations (rows h, right sides h.offset) cutting out a coset.
inline void coset_equations(const FiniteField& f, unsigned dim, const AffineCoset& c, std::vector<FieldVector>& rows) {
  if (c.offset.size() != dim) fail(ErrorKind::InvalidArgument, "coset offset has the wrong dimension");
  for (const auto& s : c.span) {
    if (s.size() != dim) fail(ErrorKind::InvalidArgument, "vectors from different ambient spaces");
  }
  for (auto h : null_space(f, c.span, dim)) {
    h.push_back(dot(f, h, c.offset));
    rows.push_back(std::move(h));
  }
}

}  // namespace detail

// Inclusion-exclusion over the excluded cosets; each intersection is empty or
// a coset of dimension dim - rank of the stacked equations.
inline CosetCount count_coset_difference(const FiniteField& f, unsigned dim, const CosetCountSpec& spec,
                                         std::size_t max_excluded = 16) {
  if (spec.exclude.size() > max_excluded) fail(ErrorKind::OutOfRange, "too many excluded cosets");
  std::vector<FieldVector> base;
  for (const auto& c : spec.include) detail::coset_equations(f, dim, c, base);
  CosetCount out;
  BigInt total = 0;
  const std::size_t k = spec.exclude.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    std::vector<FieldVector> rows = base;
    int sign = 1;
    for (std::size_t i = 0; i < k; ++i) {
      if (!(mask >> i & 1)) continue;
      sign = -sign;
      detail::coset_equations(f, dim, spec.exclude[i], rows);
    }
    std::vector<FieldVector> augmented = rows;
    std::vector<FieldVector> coeffs;
    for (const auto& r : rows) coeffs.emplace_back(r.begin(), r.end() - 1);
    const std::size_t rank = rank_of(f, coeffs);
    const std::size_t rank_aug = augmented.empty() ? 0 : rank_of(f, augmented);
    if (rank != rank_aug) continue;
    const std::size_t d = dim - rank;
    total += sign * pow(BigInt(f.order()), static_cast<unsigned>(d));
    out.poly = out.poly + (d == dim ? VFPolynomial::monomial(1, 0, sign) : VFPolynomial::monomial(0, static_cast<unsigned>(d), sign));
  }
  out.count = Count(total);
  return out;
}

inline bool in_coset(const FiniteField& f, const AffineCoset& c, const FieldVector& u) {
  return in_span(f, c.span, vec_sub(f, u, c.offset));
}

inline Count brute_force_coset_difference(const FiniteField& f, unsigned dim, const CosetCountSpec& spec) {
  const auto v_size = pow(BigInt(f.order()), dim).convert_to<std::uint64_t>();
  std::uint64_t hits = 0;
  for (std::uint64_t id = 0; id < v_size; ++id) {
    const FieldVector u = vector_from_id(id, f.order(), dim);
    bool ok = std::all_of(spec.include.begin(), spec.include.end(), [&](const AffineCoset& c) { return in_coset(f, c, u); });
    ok = ok && std::none_of(spec.exclude.begin(), spec.exclude.end(), [&](const AffineCoset& c) { return in_coset(f, c, u); });
    hits += ok;
  }
  return Count(BigInt(hits));
}

// A possibly negated theta literal in the single vector variable u.
struct ThetaLiteral {
  VectorTermSpec spec;
  bool negated = false;
};

// Rewrites a conjunction of theta literals as a coset difference: a positive
// literal removes -w_1 + <D>, a negated one restricts to it. Returns nullopt
// when some literal is unsatisfiable.
inline std::optional<CosetCountSpec> theta_conjunction_to_cosets(const FiniteField& f, unsigned dim,
                                                                 const std::vector<ThetaLiteral>& literals,
                                                                 const std::vector<FieldVector>& params) {
  CosetCountSpec out;
  for (const auto& lit : literals) {
    std::vector<FieldVector> w, wp;
    for (const auto& c : lit.spec.w) w.push_back(detail::combine(f, c, params, dim));
    for (const auto& c : lit.spec.w_prime) wp.push_back(detail::combine(f, c, params, dim));
    std::vector<FieldVector> diffs;
    for (std::size_t i = 1; i < w.size(); ++i) diffs.push_back(vec_sub(f, w[i], w[0]));
    diffs.insert(diffs.end(), wp.begin(), wp.end());
    const bool independent = rank_of(f, diffs) == diffs.size();
    if (w.empty() || !independent) {
      // The literal does not depend on u: all of V or nothing.
      if (independent == lit.negated) return std::nullopt;
      continue;
    }
    AffineCoset flat{vec_scale(f, f.neg(1), w[0]), diffs};
    (lit.negated ? out.include : out.exclude).push_back(std::move(flat));
  }
  return out;
}

inline CosetCount count_theta_conjunction(const FiniteField& f, unsigned dim, const std::vector<ThetaLiteral>& literals,
                                          const std::vector<FieldVector>& params) {
  auto spec = theta_conjunction_to_cosets(f, dim, literals, params);
  if (!spec) return {};
  return count_coset_difference(f, dim, *spec);
}

inline Count brute_force_theta_conjunction(const FiniteField& f, unsigned dim, const std::vector<ThetaLiteral>& literals,
                                           const std::vector<FieldVector>& params) {
  const auto v_size = pow(BigInt(f.order()), dim).convert_to<std::uint64_t>();
  std::uint64_t hits = 0;
  for (std::uint64_t id = 0; id < v_size; ++id) {
    const FieldVector u = vector_from_id(id, f.order(), dim);
    bool all = true;
    for (const auto& lit : literals) {
      std::vector<FieldVector> vs;
      for (const auto& c : lit.spec.w) vs.push_back(vec_add(f, u, detail::combine(f, c, params, dim)));
      for (const auto& c : lit.spec.w_prime) vs.push_back(detail::combine(f, c, params, dim));
      if ((rank_of(f, vs) == vs.size()) == lit.negated) {
        all = false;
        break;
      }
    }
    hits += all;
  }
  return Count(BigInt(hits));
}

// Complete sign vectors over `atoms` atoms satisfying a disjunction of
// conjunctions; literal +i / -i means atom i-1 true / false. The returned
// conjunctions are pairwise contradictory and cover the same set.
inline std::vector<std::vector<bool>> disjoint_sign_vectors(const std::vector<std::vector<int>>& dnf, std::size_t atoms) {
  if (atoms > 20) fail(ErrorKind::OutOfRange, "too many atoms to normalize");
  std::vector<std::vector<bool>> out;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << atoms); ++mask) {
    bool any = false;
    for (const auto& conj : dnf) {
      bool ok = true;
      for (int lit : conj) {
        const std::size_t idx = static_cast<std::size_t>(lit < 0 ? -lit : lit) - 1;
        if (idx >= atoms) fail(ErrorKind::InvalidArgument, "literal refers to an unknown atom");
        if (((mask >> idx) & 1) != (lit > 0 ? 1u : 0u)) ok = false;
      }
      if (ok) any = true;
    }
    if (!any) continue;
    std::vector<bool> signs(atoms);
    for (std::size_t i = 0; i < atoms; ++i) signs[i] = mask >> i & 1;
    out.push_back(std::move(signs));
  }
  return out;
}

// Parameters of one instance: ambient shape plus parameter vectors.
struct VSSample {
  VectorSpaceShape shape;
  std::vector<FieldVector> params;
};

struct VSGuard {
  std::string text;
  std::function<bool(const VSSample&)> holds;
};

struct GuardedVF {
  VFPolynomial poly;
  VSGuard guard;
};

namespace detail {

inline void check_guard_set(const std::vector<GuardedVF>& set, const std::vector<VSSample>& samples, const std::string& what) {
  for (const auto& s : samples) {
    std::size_t firing = 0;
    for (const auto& g : set) firing += g.guard.holds(s) ? 1 : 0;
    if (firing != 1) {
      fail(ErrorKind::NonExhaustiveGuards, what + ": " + std::to_string(firing) + " guards fire on a sample point");
    }
  }
}

}  // namespace detail

// Sum_i p_i * q_{i,h(i)} for every selector h; the composed guard is the
// conjunction of the selected inner guards. Exhaustiveness and exclusivity of
// each input set are checked on the sample points.
inline std::vector<GuardedVF> fiber_compose(const std::vector<GuardedVF>& outer, const std::vector<std::vector<GuardedVF>>& inner,
                                            const std::vector<VSSample>& samples = {}, std::size_t max_outputs = 1u << 20) {
  if (inner.size() != outer.size()) fail(ErrorKind::InvalidArgument, "one inner guard set per outer polynomial is required");
  detail::check_guard_set(outer, samples, "outer set");
  BigInt combos = 1;
  for (std::size_t i = 0; i < inner.size(); ++i) {
    if (inner[i].empty()) fail(ErrorKind::NonExhaustiveGuards, "inner guard set " + std::to_string(i) + " is empty");
    detail::check_guard_set(inner[i], samples, "inner set " + std::to_string(i));
    combos *= inner[i].size();
  }
  if (combos > max_outputs) fail(ErrorKind::BudgetExceeded, "too many selector functions");
  std::vector<GuardedVF> out;
  std::vector<std::size_t> h(outer.size(), 0);
  for (;;) {
    VFPolynomial sum;
    std::string text;
    std::vector<std::function<bool(const VSSample&)>> parts;
    for (std::size_t i = 0; i < outer.size(); ++i) {
      const auto& chosen = inner[i][h[i]];
      sum = sum + outer[i].poly * chosen.poly;
      text += (text.empty() ? "" : " & ") + chosen.guard.text;
      parts.push_back(chosen.guard.holds);
    }
    out.push_back({sum, {text.empty() ? "always" : text, [parts](const VSSample& s) {
                           for (const auto& p : parts) {
                             if (!p(s)) return false;
                           }
                           return true;
                         }}});
    std::size_t i = 0;
    while (i < h.size() && ++h[i] == inner[i].size()) h[i++] = 0;
    if (i == h.size()) break;
  }
  return out;
}

inline VSGuard always_guard() {
  return {"always", [](const VSSample&) { return true; }};
}

}  // namespace pfdim

#endif  // PFDIM_VS_ORACLE_HPP
