#ifndef PFDIM_ABELIAN_HPP
#define PFDIM_ABELIAN_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pfdim/bigint.hpp"
#include "pfdim/error.hpp"
#include "pfdim/formula.hpp"

namespace pfdim {

// Integer-linear term over counted variables x1..xr and parameters y1..ys.
struct LinearTerm {
  std::vector<long long> x;
  std::vector<long long> y;

  bool is_zero() const {
    return std::all_of(x.begin(), x.end(), [](long long c) { return c == 0; }) &&
           std::all_of(y.begin(), y.end(), [](long long c) { return c == 0; });
  }
};

enum class AtomKind { Eq, Div };

// t = 0, or q^ell | t; optionally negated.
struct StandardAtom {
  AtomKind kind = AtomKind::Eq;
  LinearTerm term;
  unsigned prime = 0;
  unsigned ell = 0;
  bool negated = false;

  static StandardAtom eq(LinearTerm t, bool negated = false) { return {AtomKind::Eq, std::move(t), 0, 0, negated}; }
  static StandardAtom div(unsigned q, unsigned ell, LinearTerm t, bool negated = false) {
    if (ell < 1) fail(ErrorKind::InvalidArgument, "divisibility atoms need ell >= 1");
    return {AtomKind::Div, std::move(t), q, ell, negated};
  }
};

namespace detail {

inline bool is_prime(unsigned long long q) {
  if (q < 2) return false;
  for (unsigned long long d = 2; d * d <= q; ++d) {
    if (q % d == 0) return false;
  }
  return true;
}

inline std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

inline std::uint64_t reduce_mod(long long c, std::uint64_t m) {
  const auto mm = static_cast<__int128>(m);
  __int128 r = static_cast<__int128>(c) % mm;
  if (r < 0) r += mm;
  return static_cast<std::uint64_t>(r);
}

// Inverse of a unit u modulo m (m >= 1).
inline std::uint64_t inverse_mod(std::uint64_t u, std::uint64_t m) {
  if (m == 1) return 0;
  __int128 old_r = static_cast<__int128>(u % m), r = m, old_s = 1, s = 0;
  while (r != 0) {
    const __int128 q = old_r / r;
    std::swap(old_r, r);
    r -= q * old_r;
    std::swap(old_s, s);
    s -= q * old_s;
  }
  if (old_r != 1) fail(ErrorKind::InvalidArgument, "coefficient is not a unit");
  __int128 inv = old_s % static_cast<__int128>(m);
  if (inv < 0) inv += m;
  return static_cast<std::uint64_t>(inv);
}

// p-adic valuation of a nonzero integer.
inline unsigned valuation(unsigned long long v, unsigned p) {
  unsigned k = 0;
  while (v % p == 0) {
    v /= p;
    ++k;
  }
  return k;
}

inline long long checked_mul(long long a, long long b) {
  long long r;
  if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::OutOfRange, "coefficient overflow");
  return r;
}

inline long long checked_add(long long a, long long b) {
  long long r;
  if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::OutOfRange, "coefficient overflow");
  return r;
}

inline long long ipow(long long base, unsigned e) {
  long long r = 1;
  for (unsigned i = 0; i < e; ++i) r = checked_mul(r, base);
  return r;
}

}  // namespace detail

// The group (Z/p^n Z)^m. Elements are m coordinates in [0, p^n).
class Homocyclic {
 public:
  Homocyclic(unsigned p, unsigned n, unsigned m) : p_(p), n_(n), m_(m) {
    if (!detail::is_prime(p)) fail(ErrorKind::InvalidArgument, std::to_string(p) + " is not prime");
    if (n < 1 || m < 1) fail(ErrorKind::InvalidArgument, "n and m must be positive");
    powers_.push_back(1);
    for (unsigned i = 0; i < n; ++i) {
      if (powers_.back() > (std::uint64_t{1} << 62) / p) fail(ErrorKind::OutOfRange, "p^n exceeds 2^62");
      powers_.push_back(powers_.back() * p);
    }
  }

  unsigned p() const { return p_; }
  unsigned n() const { return n_; }
  unsigned m() const { return m_; }
  std::uint64_t modulus() const { return powers_[n_]; }
  std::uint64_t p_pow(unsigned e) const { return powers_[std::min(e, n_)]; }
  BigInt order() const { return pow(BigInt(p_), n_ * m_); }

  // Valuation of a coordinate, capped at n.
  unsigned valuation(std::uint64_t c) const {
    if (c == 0) return n_;
    return std::min(detail::valuation(c, p_), n_);
  }

  std::vector<std::uint64_t> element(std::uint64_t id) const {
    std::vector<std::uint64_t> e(m_);
    for (unsigned i = 0; i < m_; ++i) {
      e[i] = id % modulus();
      id /= modulus();
    }
    return e;
  }

 private:
  unsigned p_, n_, m_;
  std::vector<std::uint64_t> powers_;
};

using GroupElement = std::vector<std::uint64_t>;

namespace detail {

inline void check_params(const std::vector<GroupElement>& params, const Homocyclic& g, std::size_t needed) {
  if (params.size() < needed) fail(ErrorKind::MissingAssignment, "atoms use more parameters than were supplied");
  for (const auto& y : params) {
    if (y.size() != g.m()) fail(ErrorKind::InvalidArgument, "parameter has the wrong number of coordinates");
    for (auto c : y) {
      if (c >= g.modulus()) fail(ErrorKind::OutOfRange, "parameter coordinate outside [0, p^n)");
    }
  }
}

// Coordinate c of the parameter part of a term.
inline std::uint64_t param_value(const std::vector<long long>& coeffs, const std::vector<GroupElement>& params,
                                 unsigned c, std::uint64_t mod) {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (coeffs[i] == 0) continue;
    t = (t + mulmod(reduce_mod(coeffs[i], mod), params[i][c], mod)) % mod;
  }
  return t;
}

// Intersects residue classes x = r1 mod p^a1 and x = r2 mod p^a2 coordinatewise.
inline bool meet(unsigned& level, std::vector<std::uint64_t>& res, unsigned a2, const std::uint64_t* r2, const Homocyclic& g) {
  if (a2 <= level) {
    const std::uint64_t mod = g.p_pow(a2);
    for (std::size_t c = 0; c < res.size(); ++c) {
      if (res[c] % mod != r2[c]) return false;
    }
    return true;
  }
  const std::uint64_t mod = g.p_pow(level);
  for (std::size_t c = 0; c < res.size(); ++c) {
    if (r2[c] % mod != res[c]) return false;
  }
  level = a2;
  std::copy(r2, r2 + res.size(), res.begin());
  return true;
}

}  // namespace detail

// Number of x in G with every atom true. Atoms mention at most one counted
// variable; parameters are group elements. Solution sets of positive atoms are
// cosets of p^a G; negated atoms are handled by inclusion-exclusion.
inline Count exact_count(const std::vector<StandardAtom>& atoms, const std::vector<GroupElement>& params,
                         const Homocyclic& g, unsigned max_negated = 12) {
  const unsigned p = g.p(), n = g.n(), m = g.m();
  const std::uint64_t mod = g.modulus();
  std::size_t needed = 0;
  for (const auto& a : atoms) {
    if (a.term.x.size() > 1) fail(ErrorKind::InvalidArgument, "exact_count takes one counted variable");
    needed = std::max(needed, a.term.y.size());
  }
  detail::check_params(params, g, needed);

  thread_local std::vector<std::uint64_t> neg_res;
  thread_local std::vector<unsigned> neg_level;
  thread_local std::vector<std::uint64_t> pos_res, cur_res, t_buf, r_buf;
  neg_res.clear();
  neg_level.clear();
  pos_res.assign(m, 0);
  t_buf.resize(m);
  r_buf.resize(m);
  unsigned pos_level = 0;
  const Count zero(BigInt(0));

  for (const auto& atom : atoms) {
    if (atom.kind == AtomKind::Div && atom.prime != p) {
      // Every element is divisible by a prime power coprime to p.
      if (atom.negated) return zero;
      continue;
    }
    const unsigned lambda = atom.kind == AtomKind::Eq ? n : std::min(atom.ell, n);
    const std::uint64_t k = atom.term.x.empty() ? 0 : detail::reduce_mod(atom.term.x[0], mod);
    const unsigned j = g.valuation(k);
    for (unsigned c = 0; c < m; ++c) t_buf[c] = detail::param_value(atom.term.y, params, c, mod);
    if (j >= lambda) {
      bool holds = true;
      for (unsigned c = 0; c < m && holds; ++c) holds = t_buf[c] % g.p_pow(lambda) == 0;
      if (holds == atom.negated) return zero;
      continue;
    }
    bool solvable = true;
    for (unsigned c = 0; c < m && solvable; ++c) solvable = t_buf[c] % g.p_pow(j) == 0;
    if (!solvable) {
      if (!atom.negated) return zero;
      continue;
    }
    const unsigned a = lambda - j;
    const std::uint64_t ma = g.p_pow(a);
    const std::uint64_t uinv = detail::inverse_mod((k / g.p_pow(j)) % ma, ma);
    for (unsigned c = 0; c < m; ++c) {
      r_buf[c] = (ma - detail::mulmod(uinv, (t_buf[c] / g.p_pow(j)) % ma, ma)) % ma;
    }
    if (!atom.negated) {
      if (!detail::meet(pos_level, pos_res, a, r_buf.data(), g)) return zero;
    } else {
      neg_level.push_back(a);
      neg_res.insert(neg_res.end(), r_buf.begin(), r_buf.end());
    }
  }

  const std::size_t t = neg_level.size();
  if (t > max_negated) fail(ErrorKind::OutOfRange, "too many negated atoms for inclusion-exclusion");
  const bool small = static_cast<double>(n) * m * std::log2(static_cast<double>(p)) < 62.0;
  long long total_small = 0;
  BigInt total_big = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << t); ++mask) {
    unsigned level = pos_level;
    cur_res = pos_res;
    bool ok = true;
    int sign = 1;
    for (std::size_t i = 0; i < t && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      sign = -sign;
      ok = detail::meet(level, cur_res, neg_level[i], &neg_res[i * m], g);
    }
    if (!ok) continue;
    const unsigned e = m * (n - level);
    if (small) {
      total_small += sign * static_cast<long long>(detail::ipow(p, e));
    } else {
      total_big += sign * pow(BigInt(p), e);
    }
  }
  return Count(small ? BigInt(total_small) : total_big);
}

// Enumerates G^r and tests every atom directly.
inline Count brute_force_count(const std::vector<StandardAtom>& atoms, std::size_t r,
                               const std::vector<GroupElement>& params, const Homocyclic& g,
                               std::uint64_t budget = 50'000'000) {
  const std::uint64_t mod = g.modulus();
  std::size_t needed = 0;
  for (const auto& a : atoms) {
    if (a.term.x.size() > r) fail(ErrorKind::InvalidArgument, "atom uses more counted variables than r");
    needed = std::max(needed, a.term.y.size());
  }
  detail::check_params(params, g, needed);
  const BigInt space = pow(g.order(), static_cast<unsigned>(r));
  if (space * std::max<std::size_t>(atoms.size(), 1) > budget) fail(ErrorKind::BudgetExceeded, "brute force space too large");
  const auto total = space.convert_to<std::uint64_t>();
  const std::uint64_t gsize = g.order().convert_to<std::uint64_t>();
  std::vector<GroupElement> xs(r);
  std::uint64_t hits = 0;
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t rest = code;
    for (std::size_t i = 0; i < r; ++i) {
      xs[i] = g.element(rest % gsize);
      rest /= gsize;
    }
    bool all = true;
    for (const auto& atom : atoms) {
      bool holds = true;
      const std::uint64_t target = atom.kind == AtomKind::Eq ? mod : (atom.prime == g.p() ? g.p_pow(atom.ell) : 1);
      for (unsigned c = 0; c < g.m() && holds; ++c) {
        std::uint64_t v = detail::param_value(atom.term.y, params, c, mod);
        for (std::size_t i = 0; i < atom.term.x.size(); ++i) {
          v = (v + detail::mulmod(detail::reduce_mod(atom.term.x[i], mod), xs[i][c], mod)) % mod;
        }
        holds = v % target == 0;
      }
      if (holds == atom.negated) {
        all = false;
        break;
      }
    }
    hits += all;
  }
  return Count(BigInt(hits));
}

// Sum over 0<=i<=k, -kd<=j<=kd of c_ij X^(u(iv+j)); evaluated at X=p, u=m, v=n.
struct ExponentPolynomial {
  unsigned k = 0;
  unsigned d = 0;
  std::map<std::pair<int, int>, long long> coeffs;

  void add(int i, int j, long long c) {
    auto& slot = coeffs[{i, j}];
    slot += c;
    if (slot == 0) coeffs.erase({i, j});
  }

  bool in_range() const {
    const long long bound = static_cast<long long>(k) * d;
    for (const auto& [ij, c] : coeffs) {
      if (ij.first < 0 || ij.first > static_cast<int>(k) || ij.second < -bound || ij.second > bound) return false;
    }
    return true;
  }

  bool operator==(const ExponentPolynomial& o) const { return coeffs == o.coeffs; }

  std::string to_string() const {
    if (coeffs.empty()) return "0";
    std::string out;
    for (const auto& [ij, c] : coeffs) {
      const auto [i, j] = ij;
      std::string exponent;
      if (i == 0) {
        exponent = std::to_string(j);
      } else {
        exponent = (i == 1 ? std::string("v") : std::to_string(i) + "v");
        if (j > 0) exponent += "+" + std::to_string(j);
        if (j < 0) exponent += std::to_string(j);
      }
      const bool unit = i == 0 && j == 0;
      std::string body = unit ? "1" : "X^(u(" + exponent + "))";
      long long mag = c < 0 ? -c : c;
      if (out.empty()) {
        out += c < 0 ? "-" : "";
      } else {
        out += c < 0 ? " - " : " + ";
      }
      if (mag != 1 && !unit) out += std::to_string(mag) + "*";
      out += unit ? std::to_string(mag) : body;
    }
    return out;
  }
};

inline Count evaluate_poly(const ExponentPolynomial& poly, unsigned p, unsigned m, unsigned n) {
  BigInt total = 0;
  for (const auto& [ij, c] : poly.coeffs) {
    const long long e = static_cast<long long>(ij.first) * n + ij.second;
    if (e < 0) fail(ErrorKind::NegativeExponent, "exponent " + std::to_string(e) + " with nonzero coefficient");
    total += c * pow(BigInt(p), static_cast<unsigned>(e * m));
  }
  return Count(total);
}

// Level alpha*n + beta, alpha in {0,1}; used for p^level | t, where level >= n means t = 0.
struct Level {
  int alpha = 0;
  long long beta = 0;
  bool operator==(const Level& o) const { return alpha == o.alpha && beta == o.beta; }
};

// p^level | sum_i coeffs[i]*y_i, a condition on parameters only.
struct ParamAtom {
  std::vector<long long> coeffs;
  Level level;
};

// Regime of a guard: the prime (0 = any prime outside `special`) and n (0 = n >= n_min).
struct GuardRegime {
  unsigned prime = 0;
  std::vector<unsigned> special;
  unsigned n = 0;
  unsigned n_min = 1;

  bool matches(unsigned p, unsigned nn) const {
    if (prime != 0 && p != prime) return false;
    if (prime == 0 && std::find(special.begin(), special.end(), p) != special.end()) return false;
    return n != 0 ? nn == n : nn >= n_min;
  }
};

// A guard fires when the regime matches and each subset condition has the
// recorded truth value. conditions[s] is a conjunction of parameter atoms.
struct AbelianGuard {
  GuardRegime regime;
  std::vector<std::vector<ParamAtom>> conditions;
  std::vector<bool> pattern;

  static bool atom_holds(const ParamAtom& a, const Homocyclic& g, const std::vector<GroupElement>& params) {
    long long level = static_cast<long long>(a.level.alpha) * g.n() + a.level.beta;
    level = std::clamp<long long>(level, 0, g.n());
    for (unsigned c = 0; c < g.m(); ++c) {
      if (detail::param_value(a.coeffs, params, c, g.modulus()) % g.p_pow(static_cast<unsigned>(level)) != 0) return false;
    }
    return true;
  }

  static bool conjunction_holds(const std::vector<ParamAtom>& atoms, const Homocyclic& g,
                                const std::vector<GroupElement>& params) {
    return std::all_of(atoms.begin(), atoms.end(), [&](const ParamAtom& a) { return atom_holds(a, g, params); });
  }

  bool holds(const Homocyclic& g, const std::vector<GroupElement>& params) const {
    if (!regime.matches(g.p(), g.n())) return false;
    for (std::size_t s = 0; s < conditions.size(); ++s) {
      if (conjunction_holds(conditions[s], g, params) != pattern[s]) return false;
    }
    return true;
  }

  std::string to_string() const {
    std::string out;
    if (regime.prime != 0) {
      out = "p=" + std::to_string(regime.prime);
    } else if (regime.special.empty()) {
      out = "p any";
    } else {
      out = "p not in {";
      for (std::size_t i = 0; i < regime.special.size(); ++i) out += (i ? "," : "") + std::to_string(regime.special[i]);
      out += "}";
    }
    out += regime.n != 0 ? " & n=" + std::to_string(regime.n) : " & n>=" + std::to_string(regime.n_min);
    const std::string base = regime.prime != 0 ? std::to_string(regime.prime) : "p";
    for (std::size_t s = 0; s < conditions.size(); ++s) {
      if (conditions[s].empty()) continue;
      std::string conj;
      for (const auto& a : conditions[s]) {
        if (!conj.empty()) conj += " & ";
        std::string term;
        for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
          const long long c = a.coeffs[i];
          if (c == 0) continue;
          const long long mag = c < 0 ? -c : c;
          term += term.empty() ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ");
          term += (mag == 1 ? "" : std::to_string(mag) + "*") + "y" + std::to_string(i + 1);
        }
        std::string level;
        if (a.level.alpha == 1) {
          level = a.level.beta == 0 ? "n" : "n" + std::to_string(a.level.beta);
        } else {
          level = std::to_string(a.level.beta);
        }
        conj += a.level.alpha == 1 && a.level.beta >= 0 ? term + " = 0" : "div(" + base + "^" + level + ", " + term + ")";
      }
      out += pattern[s] ? " & (" + conj + ")" : " & !(" + conj + ")";
    }
    return out;
  }
};

struct GuardedPolynomial {
  ExponentPolynomial poly;
  AbelianGuard guard;
};

struct SymbolicOptions {
  unsigned max_r = 3;
  std::optional<unsigned> d;
  unsigned max_negated = 5;
};

struct SymbolicResult {
  std::vector<GuardedPolynomial> entries;
  unsigned d = 0;
  // False when some polynomial needed a larger d than requested.
  bool d_sufficed = true;

  // Indices of entries whose guard fires.
  std::vector<std::size_t> firing(const Homocyclic& g, const std::vector<GroupElement>& params) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].guard.holds(g, params)) out.push_back(i);
    }
    return out;
  }
};

namespace detail {

// p^level | coeffs . (x1..xr, y1..ys)
struct SymAtom {
  std::vector<long long> coeffs;
  Level level;
};

// Decision context for one regime. In generic mode (n == 0) comparisons
// assume n is large and record the least n for which they hold.
struct RegimeContext {
  unsigned p = 0;
  unsigned n = 0;
  long long threshold = 1;
  std::set<unsigned long long> queried;

  void need(long long n_at_least) { threshold = std::max(threshold, n_at_least); }

  Level effective(Level l) {
    if (n != 0) {
      const long long v = std::clamp<long long>(l.alpha * static_cast<long long>(n) + l.beta, 0, n);
      return {0, v};
    }
    if (l.alpha == 1) {
      if (l.beta > 0) l.beta = 0;
      need(-l.beta);
      return l;
    }
    if (l.beta < 0) l.beta = 0;
    need(l.beta);
    return l;
  }

  bool trivial(Level l) const { return l.alpha == 0 && l.beta <= 0; }

  // Valuation of a coefficient as a level (n for coefficients vanishing mod p^n).
  Level val(long long k) {
    if (n != 0 && p != 0) k = static_cast<long long>(reduce_mod(k, static_cast<std::uint64_t>(ipow(p, n))));
    if (k == 0) return n != 0 ? Level{0, n} : Level{1, 0};
    const unsigned long long mag = k < 0 ? static_cast<unsigned long long>(-k) : static_cast<unsigned long long>(k);
    long long v = 0;
    if (p == 0) {
      queried.insert(mag);
    } else {
      v = valuation(mag, p);
    }
    if (n != 0) return {0, std::min<long long>(v, n)};
    need(v + 1);
    return {0, v};
  }

  bool ge(Level a, Level b) {
    if (n != 0 || a.alpha == b.alpha) return a.beta + a.alpha * static_cast<long long>(n) >= b.beta + b.alpha * static_cast<long long>(n);
    if (a.alpha == 1) {
      need(b.beta - a.beta);
      return true;
    }
    need(a.beta - b.beta + 1);
    return false;
  }

  void normalize(std::vector<long long>& coeffs) const {
    if (n == 0 || p == 0) return;
    const auto mod = static_cast<std::uint64_t>(ipow(p, n));
    for (auto& c : coeffs) c = static_cast<long long>(reduce_mod(c, mod));
  }
};

struct Solved {
  int i = 0;
  long long j = 0;
  std::vector<ParamAtom> conditions;
};

// Projects a positive system variable by variable. Each fiber is empty or a
// coset of p^a G; the projection is again a positive system.
inline Solved solve_positive(std::vector<SymAtom> atoms, std::size_t r, std::size_t s, RegimeContext& ctx) {
  Solved out;
  for (std::size_t var = r; var-- > 0;) {
    struct Coset {
      std::vector<long long> rest;
      Level lambda;
      long long j;
      long long u;
      Level a;
    };
    std::vector<SymAtom> next;
    std::vector<Coset> cosets;
    for (auto& atom : atoms) {
      const Level lambda = ctx.effective(atom.level);
      if (ctx.trivial(lambda)) continue;
      const long long k = atom.coeffs[var];
      const Level j = ctx.val(k);
      atom.coeffs[var] = 0;
      if (ctx.ge(j, lambda)) {
        next.push_back({atom.coeffs, lambda});
        continue;
      }
      const long long u = ctx.p == 0 ? k : k / ipow(ctx.p, static_cast<unsigned>(j.beta));
      cosets.push_back({atom.coeffs, lambda, j.beta, u, Level{lambda.alpha, lambda.beta - j.beta}});
    }
    std::size_t star = 0;
    for (std::size_t i = 1; i < cosets.size(); ++i) {
      if (!ctx.ge(cosets[star].a, cosets[i].a)) star = i;
    }
    if (cosets.empty()) {
      out.i += 1;
    } else {
      out.i += 1 - cosets[star].a.alpha;
      out.j -= cosets[star].a.beta;
    }
    for (std::size_t i = 0; i < cosets.size(); ++i) {
      const auto& c = cosets[i];
      if (c.j > 0) next.push_back({c.rest, Level{0, c.j}});
      if (i == star) continue;
      const auto& st = cosets[star];
      // Coset of atom i contains the finer coset of atom star.
      std::vector<long long> coeffs(c.rest.size());
      Level level = c.lambda;
      long long f1 = st.u, f2 = c.u;
      if (c.j >= st.j) {
        f2 = checked_mul(f2, ipow(ctx.p == 0 ? 1 : ctx.p, static_cast<unsigned>(c.j - st.j)));
      } else {
        f1 = checked_mul(f1, ipow(ctx.p, static_cast<unsigned>(st.j - c.j)));
        level.beta += st.j - c.j;
      }
      for (std::size_t t = 0; t < coeffs.size(); ++t) {
        coeffs[t] = checked_add(checked_mul(f1, c.rest[t]), -checked_mul(f2, st.rest[t]));
      }
      next.push_back({std::move(coeffs), level});
    }
    atoms.clear();
    for (auto& a : next) {
      ctx.normalize(a.coeffs);
      if (std::any_of(a.coeffs.begin(), a.coeffs.end(), [](long long c) { return c != 0; })) atoms.push_back(std::move(a));
    }
  }
  for (auto& a : atoms) {
    const Level lambda = ctx.effective(a.level);
    if (ctx.trivial(lambda)) continue;
    out.conditions.push_back({std::vector<long long>(a.coeffs.begin() + static_cast<long>(r), a.coeffs.end()), lambda});
    (void)s;
  }
  return out;
}

inline std::vector<unsigned> prime_factors(unsigned long long v) {
  std::vector<unsigned> out;
  for (unsigned long long d = 2; d * d <= v; ++d) {
    if (v % d) continue;
    out.push_back(static_cast<unsigned>(d));
    while (v % d == 0) v /= d;
  }
  if (v > 1) out.push_back(static_cast<unsigned>(v));
  return out;
}

// Downward-closed truth patterns over subsets of {0..t-1}; forced[s] marks
// subsets whose condition is empty and therefore true when allowed.
inline void downsets(std::size_t t, const std::vector<bool>& forced, std::vector<std::vector<bool>>& out) {
  const std::size_t count = std::size_t{1} << t;
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [](std::size_t a, std::size_t b) { return __builtin_popcountll(a) < __builtin_popcountll(b); });
  std::vector<bool> cur(count, false);
  std::function<void(std::size_t)> rec = [&](std::size_t idx) {
    if (idx == count) {
      out.push_back(cur);
      return;
    }
    const std::size_t s = order[idx];
    bool allowed = true;
    for (std::size_t b = 0; b < t; ++b) {
      if ((s >> b & 1) && !cur[s ^ (std::size_t{1} << b)]) allowed = false;
    }
    if (!allowed) {
      cur[s] = false;
      rec(idx + 1);
      return;
    }
    cur[s] = true;
    rec(idx + 1);
    if (!forced[s]) {
      cur[s] = false;
      rec(idx + 1);
    }
  };
  rec(0);
}

}  // namespace detail

// Finite set of guarded polynomials: for every p, n, m and parameters exactly
// one guard fires and its polynomial evaluated at (p, m, n) is the count of
// r-tuples satisfying the conjunction.
inline SymbolicResult symbolic_count(const std::vector<StandardAtom>& atoms, std::size_t r, std::size_t s,
                                     const SymbolicOptions& options = {}) {
  if (r > options.max_r) fail(ErrorKind::OutOfRange, "r = " + std::to_string(r) + " exceeds the bound " + std::to_string(options.max_r));
  for (const auto& a : atoms) {
    if (a.term.x.size() > r || a.term.y.size() > s) fail(ErrorKind::InvalidArgument, "atom uses undeclared variables");
    if (a.kind == AtomKind::Div && !detail::is_prime(a.prime)) fail(ErrorKind::InvalidArgument, "divisibility base must be prime");
  }

  auto widen = [&](const StandardAtom& a) {
    std::vector<long long> c(r + s, 0);
    std::copy(a.term.x.begin(), a.term.x.end(), c.begin());
    std::copy(a.term.y.begin(), a.term.y.end(), c.begin() + static_cast<long>(r));
    return c;
  };

  struct RegimeOutput {
    GuardRegime regime;
    std::vector<GuardedPolynomial> entries;
  };

  // Runs one regime; returns the generic threshold through ctx.
  auto run = [&](detail::RegimeContext& ctx, GuardRegime regime, std::vector<GuardedPolynomial>& out) {
    std::vector<detail::SymAtom> pos;
    std::vector<detail::SymAtom> neg;
    bool empty = false;
    for (const auto& a : atoms) {
      if (a.kind == AtomKind::Div && (ctx.p == 0 || a.prime != ctx.p)) {
        if (a.negated) empty = true;
        continue;
      }
      detail::SymAtom sa{widen(a), a.kind == AtomKind::Eq ? Level{1, 0} : Level{0, a.ell}};
      (a.negated ? neg : pos).push_back(std::move(sa));
    }
    if (neg.size() > options.max_negated) fail(ErrorKind::OutOfRange, "too many negated atoms for the symbolic count");
    if (empty) {
      AbelianGuard guard{regime, {}, {}};
      out.push_back({ExponentPolynomial{static_cast<unsigned>(r), 0, {}}, guard});
      return;
    }
    const std::size_t t = neg.size();
    std::vector<detail::Solved> solved;
    for (std::size_t mask = 0; mask < (std::size_t{1} << t); ++mask) {
      std::vector<detail::SymAtom> system = pos;
      for (std::size_t i = 0; i < t; ++i) {
        if (mask >> i & 1) system.push_back(neg[i]);
      }
      solved.push_back(detail::solve_positive(std::move(system), r, s, ctx));
    }
    std::vector<bool> forced(solved.size());
    std::vector<std::vector<ParamAtom>> conditions(solved.size());
    for (std::size_t i = 0; i < solved.size(); ++i) {
      forced[i] = solved[i].conditions.empty();
      conditions[i] = solved[i].conditions;
    }
    std::vector<std::vector<bool>> patterns;
    detail::downsets(t, forced, patterns);
    for (const auto& pattern : patterns) {
      ExponentPolynomial poly{static_cast<unsigned>(r), 0, {}};
      for (std::size_t mask = 0; mask < solved.size(); ++mask) {
        if (!pattern[mask]) continue;
        const long long sign = __builtin_popcountll(mask) % 2 ? -1 : 1;
        poly.add(solved[mask].i, static_cast<int>(solved[mask].j), sign);
      }
      out.push_back({poly, AbelianGuard{regime, conditions, pattern}});
    }
  };

  SymbolicResult result;
  // Generic and small-n regimes for primes outside the special set.
  detail::RegimeContext other;
  std::vector<GuardedPolynomial> other_entries;
  run(other, GuardRegime{}, other_entries);
  const auto other_threshold = static_cast<unsigned>(std::max<long long>(other.threshold, 1));
  std::vector<GuardedPolynomial> other_small;
  std::set<unsigned long long> queried = other.queried;
  for (unsigned nn = 1; nn < other_threshold; ++nn) {
    detail::RegimeContext ctx;
    ctx.n = nn;
    run(ctx, GuardRegime{0, {}, nn, 1}, other_small);
    queried.insert(ctx.queried.begin(), ctx.queried.end());
  }
  std::set<unsigned> special;
  for (auto v : queried) {
    for (auto q : detail::prime_factors(v)) special.insert(q);
  }
  for (const auto& a : atoms) {
    if (a.kind == AtomKind::Div) special.insert(a.prime);
  }
  const std::vector<unsigned> special_list(special.begin(), special.end());
  for (auto& e : other_entries) {
    e.guard.regime.special = special_list;
    e.guard.regime.n_min = other_threshold;
    result.entries.push_back(std::move(e));
  }
  for (auto& e : other_small) {
    e.guard.regime.special = special_list;
    result.entries.push_back(std::move(e));
  }

  for (unsigned q : special_list) {
    detail::RegimeContext generic;
    generic.p = q;
    std::vector<GuardedPolynomial> entries;
    run(generic, GuardRegime{q, {}, 0, 1}, entries);
    const auto threshold = static_cast<unsigned>(std::max<long long>(generic.threshold, 1));
    for (auto& e : entries) e.guard.regime.n_min = threshold;
    for (unsigned nn = 1; nn < threshold; ++nn) {
      detail::RegimeContext ctx;
      ctx.p = q;
      ctx.n = nn;
      run(ctx, GuardRegime{q, {}, nn, 1}, entries);
    }
    for (auto& e : entries) result.entries.push_back(std::move(e));
  }

  // Default d: largest ell and largest valuation of a counted-variable coefficient at a special prime.
  unsigned d = 1;
  for (const auto& a : atoms) {
    if (a.kind == AtomKind::Div) d = std::max(d, a.ell);
    for (long long c : a.term.x) {
      if (c == 0) continue;
      for (unsigned q : special_list) d = std::max(d, detail::valuation(static_cast<unsigned long long>(c < 0 ? -c : c), q));
    }
  }
  if (options.d) {
    if (*options.d < d) fail(ErrorKind::InvalidArgument, "d is below the largest ell or coefficient valuation");
    d = *options.d;
  }
  result.d = d;
  for (auto& e : result.entries) {
    e.poly.d = d;
    // With n fixed by the guard the polynomial may also be written constant in v.
    if (e.guard.regime.n != 0 && !e.poly.in_range()) {
      ExponentPolynomial fixed{e.poly.k, d, {}};
      for (const auto& [ij, c] : e.poly.coeffs) fixed.add(0, ij.first * static_cast<int>(e.guard.regime.n) + ij.second, c);
      if (fixed.in_range()) e.poly = std::move(fixed);
    }
    while (!e.poly.in_range()) {
      ++e.poly.d;
      result.d_sufficed = false;
    }
  }
  return result;
}

// Term grammar: atoms "a1*x1 + b1*y1 = 0", "div(p^l, <term>)", joined by '&',
// with '!' negating an atom. Variables are x<i> (counted) and y<i> (parameters).
struct AbelianSystem {
  std::vector<StandardAtom> atoms;
  std::size_t r = 0;
  std::size_t s = 0;
};

namespace detail {

class AbelianParser {
 public:
  explicit AbelianParser(std::string_view text) : text_(text) {}

  AbelianSystem parse() {
    AbelianSystem sys;
    skip();
    if (pos_ == text_.size()) error("empty conjunction");
    sys.atoms.push_back(atom());
    skip();
    while (pos_ < text_.size() && text_[pos_] == '&') {
      ++pos_;
      sys.atoms.push_back(atom());
      skip();
    }
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    sys.r = max_x_;
    sys.s = max_y_;
    for (auto& a : sys.atoms) {
      a.term.x.resize(sys.r, 0);
      a.term.y.resize(sys.s, 0);
    }
    return sys;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::Schema, "abelian atom at offset " + std::to_string(pos_) + ": " + msg);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) error(std::string("expected '") + c + "'");
  }

  bool at_digit() {
    skip();
    return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]));
  }

  long long integer() {
    if (!at_digit()) error("expected an integer");
    long long v = 0;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
      v = checked_add(checked_mul(v, 10), text_[pos_] - '0');
      ++pos_;
    }
    return v;
  }

  StandardAtom atom() {
    skip();
    if (accept('!')) {
      StandardAtom a = atom();
      a.negated = !a.negated;
      return a;
    }
    if (text_.compare(pos_, 3, "div") == 0) {
      pos_ += 3;
      expect('(');
      const long long q = integer();
      long long ell = 1;
      if (accept('^')) ell = integer();
      if (!is_prime(static_cast<unsigned long long>(q))) error(std::to_string(q) + " is not prime");
      if (ell < 1) error("exponent must be at least 1");
      expect(',');
      LinearTerm t = term();
      expect(')');
      return StandardAtom::div(static_cast<unsigned>(q), static_cast<unsigned>(ell), std::move(t));
    }
    LinearTerm lhs = term();
    skip();
    bool negated = false;
    if (pos_ + 1 < text_.size() && text_[pos_] == '!' && text_[pos_ + 1] == '=') {
      pos_ += 2;
      negated = true;
    } else {
      expect('=');
    }
    LinearTerm rhs = term();
    subtract(lhs.x, rhs.x);
    subtract(lhs.y, rhs.y);
    return StandardAtom::eq(std::move(lhs), negated);
  }

  static void subtract(std::vector<long long>& a, const std::vector<long long>& b) {
    if (a.size() < b.size()) a.resize(b.size(), 0);
    for (std::size_t i = 0; i < b.size(); ++i) a[i] = checked_add(a[i], -b[i]);
  }

  LinearTerm term() {
    LinearTerm t;
    bool first = true;
    for (;;) {
      long long sign = 1;
      if (accept('-')) {
        sign = -1;
      } else if (!first && !accept('+')) {
        break;
      } else if (first) {
        accept('+');
      }
      monomial(t, sign);
      first = false;
    }
    return t;
  }

  void monomial(LinearTerm& t, long long sign) {
    skip();
    long long coeff = 1;
    bool has_coeff = false;
    if (at_digit()) {
      coeff = integer();
      has_coeff = true;
      accept('*');
      skip();
    }
    if (pos_ < text_.size() && (text_[pos_] == 'x' || text_[pos_] == 'y')) {
      const char kind = text_[pos_++];
      std::size_t index = 1;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) index = static_cast<std::size_t>(integer());
      if (index < 1 || index > 64) error("variable index out of range");
      auto& vec = kind == 'x' ? t.x : t.y;
      auto& max = kind == 'x' ? max_x_ : max_y_;
      if (vec.size() < index) vec.resize(index, 0);
      vec[index - 1] = checked_add(vec[index - 1], checked_mul(sign, coeff));
      max = std::max(max, index);
      return;
    }
    if (has_coeff && coeff == 0) return;
    error(has_coeff ? "terms have no constant offset" : "expected a variable");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t max_x_ = 0;
  std::size_t max_y_ = 0;
};

}  // namespace detail

inline AbelianSystem parse_abelian(std::string_view text) { return detail::AbelianParser(text).parse(); }

inline std::string render_linear_term(const LinearTerm& t) {
  std::string out;
  auto emit = [&](long long c, const std::string& var) {
    if (c == 0) return;
    const long long mag = c < 0 ? -c : c;
    out += out.empty() ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ");
    out += (mag == 1 ? "" : std::to_string(mag) + "*") + var;
  };
  for (std::size_t i = 0; i < t.x.size(); ++i) emit(t.x[i], "x" + std::to_string(i + 1));
  for (std::size_t i = 0; i < t.y.size(); ++i) emit(t.y[i], "y" + std::to_string(i + 1));
  return out.empty() ? "0" : out;
}

inline std::string render_atom(const StandardAtom& a) {
  std::string body = a.kind == AtomKind::Eq
                         ? render_linear_term(a.term) + " = 0"
                         : "div(" + std::to_string(a.prime) + "^" + std::to_string(a.ell) + ", " + render_linear_term(a.term) + ")";
  return a.negated ? "!" + body : body;
}

// The conjunction as a formula over make_homocyclic's signature (add, neg,
// zero); counted variables x1.., parameters y1.., all of sort G.
inline Formula atoms_to_formula(const std::vector<StandardAtom>& atoms, const Homocyclic& g) {
  const std::uint64_t mod = g.modulus();
  auto scaled = [&](Term v, long long c) -> std::optional<Term> {
    const std::uint64_t k = detail::reduce_mod(c, mod);
    if (k == 0) return std::nullopt;
    // Use the shorter of k*v and -(mod-k)*v.
    const bool negate = mod - k < k;
    const std::uint64_t reps = negate ? mod - k : k;
    Term acc = v;
    for (std::uint64_t i = 1; i < reps; ++i) acc = Term::apply("add", "G", {acc, v});
    if (negate) acc = Term::apply("neg", "G", {acc});
    return acc;
  };
  auto linear = [&](const LinearTerm& t) {
    std::optional<Term> acc;
    auto push = [&](long long c, const std::string& name) {
      auto part = scaled(Term::var(name, "G"), c);
      if (!part) return;
      acc = acc ? Term::apply("add", "G", {*acc, *part}) : *part;
    };
    for (std::size_t i = 0; i < t.x.size(); ++i) push(t.x[i], "x" + std::to_string(i + 1));
    for (std::size_t i = 0; i < t.y.size(); ++i) push(t.y[i], "y" + std::to_string(i + 1));
    return acc ? *acc : Term::constant("zero", "G");
  };
  std::optional<Formula> out;
  for (const auto& a : atoms) {
    Formula f = Formula::eq(linear(a.term), Term::constant("zero", "G"));
    if (a.kind == AtomKind::Div) {
      const BigInt qe = pow(BigInt(a.prime), a.ell) % BigInt(mod);
      auto multiple = scaled(Term::var("z", "G"), static_cast<long long>(qe.convert_to<std::uint64_t>()));
      f = Formula::exists("z", "G", Formula::eq(multiple ? *multiple : Term::constant("zero", "G"), linear(a.term)));
    }
    if (a.negated) f = Formula::negate(std::move(f));
    out = out ? Formula::conj(std::move(*out), std::move(f)) : std::move(f);
  }
  return out ? *out : Formula::eq(Term::constant("zero", "G"), Term::constant("zero", "G"));
}

// Element id of a group element in make_homocyclic's numbering.
inline std::uint32_t homocyclic_id(const GroupElement& e, const Homocyclic& g) {
  std::uint64_t id = 0;
  for (std::size_t i = e.size(); i-- > 0;) id = id * g.modulus() + e[i];
  return static_cast<std::uint32_t>(id);
}

}  // namespace pfdim

#endif  // PFDIM_ABELIAN_HPP
