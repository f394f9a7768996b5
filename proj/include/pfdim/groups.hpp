#ifndef PFDIM_GROUPS_HPP
#define PFDIM_GROUPS_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "pfdim/bigint.hpp"
#include "pfdim/engine.hpp"
#include "pfdim/error.hpp"
#include "pfdim/structure.hpp"

namespace pfdim {

// A finite group as a multiplication table on ids 0..order-1.
class FiniteGroup {
 public:
  FiniteGroup(std::string name, std::vector<std::uint32_t> mul, std::vector<std::string> labels)
      : name_(std::move(name)), labels_(std::move(labels)) {
    order_ = static_cast<std::uint32_t>(labels_.size());
    if (mul.size() != std::size_t{order_} * order_) fail(ErrorKind::InvariantViolation, "multiplication table has the wrong size");
    mul_ = std::move(mul);
    identity_ = order_;
    for (std::uint32_t e = 0; e < order_ && identity_ == order_; ++e) {
      bool ok = true;
      for (std::uint32_t a = 0; a < order_ && ok; ++a) ok = this->mul(e, a) == a && this->mul(a, e) == a;
      if (ok) identity_ = e;
    }
    if (identity_ == order_) fail(ErrorKind::InvariantViolation, "table has no identity");
    inv_.assign(order_, order_);
    for (std::uint32_t a = 0; a < order_; ++a) {
      for (std::uint32_t b = 0; b < order_; ++b) {
        if (this->mul(a, b) == identity_) inv_[a] = b;
      }
      if (inv_[a] == order_) fail(ErrorKind::InvariantViolation, "element without inverse");
    }
  }

  const std::string& name() const { return name_; }
  std::uint32_t order() const { return order_; }
  std::uint32_t identity() const { return identity_; }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const { return mul_[std::size_t{a} * order_ + b]; }
  std::uint32_t inv(std::uint32_t a) const { return inv_[a]; }
  const std::string& label(std::uint32_t a) const { return labels_[a]; }

  FiniteStructure to_structure() const {
    Signature sig;
    const SortId g = sig.add_sort("G");
    sig.add_function("mul", {g, g}, g);
    sig.add_function("inv", {g}, g);
    sig.add_constant("e", g);
    StructureBuilder b(sig, {order_});
    b.set_function_table("mul", mul_);
    b.set_function_table("inv", inv_);
    b.set_constant("e", identity_);
    b.set_labels(g, labels_);
    return b.build();
  }

  // Reads a group back from a structure with mul, inv and e.
  static FiniteGroup from_structure(const FiniteStructure& m, std::string name = "G") {
    const Signature& sig = m.signature();
    auto mul = sig.find_function("mul");
    if (!mul || sig.functions()[*mul].args.size() != 2) fail(ErrorKind::InvalidArgument, "structure has no binary 'mul'");
    const SortId g = sig.functions()[*mul].result;
    const auto n = static_cast<std::uint32_t>(m.sort_size(g));
    std::vector<std::uint32_t> table(std::size_t{n} * n);
    std::vector<std::string> labels(n);
    for (std::uint32_t a = 0; a < n; ++a) {
      labels[a] = m.label(g, a);
      for (std::uint32_t b = 0; b < n; ++b) {
        const ElementId args[2] = {a, b};
        table[std::size_t{a} * n + b] = m.function(*mul).apply(args);
      }
    }
    FiniteGroup group(std::move(name), std::move(table), std::move(labels));
    if (!group.is_associative()) fail(ErrorKind::InvariantViolation, "'mul' is not associative");
    return group;
  }

  bool is_associative() const {
    for (std::uint32_t a = 0; a < order_; ++a) {
      for (std::uint32_t b = 0; b < order_; ++b) {
        const std::uint32_t ab = mul(a, b);
        for (std::uint32_t c = 0; c < order_; ++c) {
          if (mul(ab, c) != mul(a, mul(b, c))) return false;
        }
      }
    }
    return true;
  }

 private:
  std::string name_;
  std::uint32_t order_ = 0;
  std::uint32_t identity_ = 0;
  std::vector<std::uint32_t> mul_;
  std::vector<std::uint32_t> inv_;
  std::vector<std::string> labels_;
};

namespace detail {

// Closes a list of elements under an associative product given on values.
template <class T, class Mul, class Label>
FiniteGroup group_from_elements(std::string name, std::vector<T> elements, Mul mul, Label label) {
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());
  std::map<T, std::uint32_t> index;
  for (std::uint32_t i = 0; i < elements.size(); ++i) index[elements[i]] = i;
  const auto n = static_cast<std::uint32_t>(elements.size());
  std::vector<std::uint32_t> table(std::size_t{n} * n);
  std::vector<std::string> labels;
  for (std::uint32_t a = 0; a < n; ++a) {
    labels.push_back(label(elements[a]));
    for (std::uint32_t b = 0; b < n; ++b) {
      auto it = index.find(mul(elements[a], elements[b]));
      if (it == index.end()) fail(ErrorKind::InvariantViolation, "element set is not closed under multiplication");
      table[std::size_t{a} * n + b] = it->second;
    }
  }
  return FiniteGroup(std::move(name), std::move(table), std::move(labels));
}

using Perm = std::vector<int>;

inline Perm compose(const Perm& a, const Perm& b) {
  // (a*b)(i) = a(b(i)): apply b first.
  Perm c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[b[i]];
  return c;
}

inline bool is_even(const Perm& p) {
  int inversions = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = i + 1; j < p.size(); ++j) inversions += p[i] > p[j];
  }
  return inversions % 2 == 0;
}

inline std::string cycle_label(const Perm& p) {
  std::vector<bool> seen(p.size(), false);
  std::string out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (seen[i] || p[i] == static_cast<int>(i)) continue;
    out += "(";
    for (std::size_t j = i; !seen[j]; j = static_cast<std::size_t>(p[j])) {
      seen[j] = true;
      if (out.back() != '(') out += " ";
      out += std::to_string(j + 1);
    }
    out += ")";
  }
  return out.empty() ? "()" : out;
}

inline FiniteGroup permutation_group(std::string name, int degree, bool even_only) {
  std::vector<Perm> perms;
  Perm p(degree);
  for (int i = 0; i < degree; ++i) p[i] = i;
  do {
    if (!even_only || is_even(p)) perms.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return group_from_elements(std::move(name), perms, compose, cycle_label);
}

// 2x2 matrices over F_7 of determinant 1 modulo {I, -I}; the representative
// has its first nonzero entry in 1..3.
inline FiniteGroup psl27() {
  using M = std::array<int, 4>;
  auto normalize = [](M m) {
    for (int x : m) {
      if (x == 0) continue;
      if (x > 3) {
        for (auto& y : m) y = (7 - y) % 7;
      }
      break;
    }
    return m;
  };
  std::vector<M> elements;
  for (int a = 0; a < 7; ++a) {
    for (int b = 0; b < 7; ++b) {
      for (int c = 0; c < 7; ++c) {
        for (int d = 0; d < 7; ++d) {
          if (((a * d - b * c) % 7 + 7) % 7 == 1) elements.push_back(normalize({a, b, c, d}));
        }
      }
    }
  }
  auto mul = [normalize](const M& x, const M& y) {
    return normalize({(x[0] * y[0] + x[1] * y[2]) % 7, (x[0] * y[1] + x[1] * y[3]) % 7, (x[2] * y[0] + x[3] * y[2]) % 7,
                      (x[2] * y[1] + x[3] * y[3]) % 7});
  };
  auto label = [](const M& m) {
    return "[" + std::to_string(m[0]) + " " + std::to_string(m[1]) + "; " + std::to_string(m[2]) + " " + std::to_string(m[3]) + "]";
  };
  return group_from_elements("PSL(2,7)", elements, mul, label);
}

}  // namespace detail

inline FiniteGroup cyclic_group(unsigned k) {
  if (k < 1 || k > 4096) fail(ErrorKind::OutOfRange, "cyclic group order must lie in 1..4096");
  std::vector<std::uint32_t> table(std::size_t{k} * k);
  std::vector<std::string> labels;
  for (unsigned a = 0; a < k; ++a) {
    labels.push_back(std::to_string(a));
    for (unsigned b = 0; b < k; ++b) table[std::size_t{a} * k + b] = (a + b) % k;
  }
  return FiniteGroup("C" + std::to_string(k), std::move(table), std::move(labels));
}

// Built-in groups: C<k>, S3, S4, A4, A5, PSL(2,7).
inline FiniteGroup named_group(const std::string& name) {
  if (name == "S3") return detail::permutation_group("S3", 3, false);
  if (name == "S4") return detail::permutation_group("S4", 4, false);
  if (name == "A4") return detail::permutation_group("A4", 4, true);
  if (name == "A5") return detail::permutation_group("A5", 5, true);
  if (name == "PSL(2,7)" || name == "PSL27") return detail::psl27();
  if (name.size() > 1 && name[0] == 'C') {
    unsigned k = 0;
    for (std::size_t i = 1; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i])) || k > 100000) fail(ErrorKind::InvalidArgument, "bad group name '" + name + "'");
      k = k * 10 + static_cast<unsigned>(name[i] - '0');
    }
    return cyclic_group(k);
  }
  fail(ErrorKind::InvalidArgument, "unknown group '" + name + "' (known: C<k>, S3, S4, A4, A5, PSL(2,7))");
}

// A group word in variables 1..d.
struct WordExpr {
  enum class Kind { Var, Identity, Mul, Inv };
  Kind kind = Kind::Identity;
  unsigned var = 0;
  std::vector<WordExpr> children;

  static WordExpr variable(unsigned v) { return {Kind::Var, v, {}}; }
  static WordExpr identity() { return {Kind::Identity, 0, {}}; }
  static WordExpr mul(WordExpr a, WordExpr b) { return {Kind::Mul, 0, {std::move(a), std::move(b)}}; }
  static WordExpr inv(WordExpr a) { return {Kind::Inv, 0, {std::move(a)}}; }

  static WordExpr power(const WordExpr& a, long long k) {
    WordExpr base = k < 0 ? inv(a) : a;
    const long long n = k < 0 ? -k : k;
    if (n == 0) return identity();
    WordExpr out = base;
    for (long long i = 1; i < n; ++i) out = mul(out, base);
    return out;
  }

  // Evaluates with variable i bound to values[i-1].
  std::uint32_t eval(const FiniteGroup& g, const std::uint32_t* values) const {
    switch (kind) {
      case Kind::Var: return values[var - 1];
      case Kind::Identity: return g.identity();
      case Kind::Mul: return g.mul(children[0].eval(g, values), children[1].eval(g, values));
      case Kind::Inv: return g.inv(children[0].eval(g, values));
    }
    return g.identity();
  }
};

struct ParsedWord {
  WordExpr expr;
  std::vector<std::string> variables;
  unsigned arity() const { return static_cast<unsigned>(variables.size()); }
};

namespace detail {

class WordParser {
 public:
  explicit WordParser(std::string text) : text_(std::move(text)) {}

  ParsedWord run() {
    ParsedWord out;
    out.expr = product();
    skip();
    if (pos_ != text_.size()) error("unexpected '" + std::string(1, text_[pos_]) + "'");
    out.variables = vars_;
    return out;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorKind::InvalidArgument, "word, offset " + std::to_string(pos_) + ": " + msg);
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

  WordExpr product() {
    if (++depth_ > 200) error("nesting too deep");
    WordExpr w = factor();
    while (accept('*')) w = WordExpr::mul(std::move(w), factor());
    --depth_;
    return w;
  }

  WordExpr factor() {
    WordExpr base = atom();
    while (accept('^')) {
      skip();
      bool negative = false;
      if (pos_ < text_.size() && text_[pos_] == '-') {
        negative = true;
        ++pos_;
      }
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_]))) error("expected an exponent");
      long long k = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        k = k * 10 + (text_[pos_++] - '0');
        if (k > 1000) error("exponent too large");
      }
      base = WordExpr::power(base, negative ? -k : k);
    }
    return base;
  }

  WordExpr atom() {
    skip();
    if (pos_ >= text_.size()) error("unexpected end of word");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      WordExpr w = product();
      if (!accept(')')) error("expected ')'");
      return w;
    }
    if (c == '[') {
      ++pos_;
      WordExpr a = product();
      if (!accept(',')) error("expected ','");
      WordExpr b = product();
      if (!accept(']')) error("expected ']'");
      // [a,b] = a b a^-1 b^-1
      return WordExpr::mul(WordExpr::mul(WordExpr::mul(a, b), WordExpr::inv(a)), WordExpr::inv(b));
    }
    if (c == '1') {
      ++pos_;
      return WordExpr::identity();
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = pos_;
      while (j < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[j])) || text_[j] == '_')) ++j;
      const std::string name = text_.substr(pos_, j - pos_);
      pos_ = j;
      if (name == "e") return WordExpr::identity();
      auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it == vars_.end()) {
        vars_.push_back(name);
        return WordExpr::variable(static_cast<unsigned>(vars_.size()));
      }
      return WordExpr::variable(static_cast<unsigned>(it - vars_.begin() + 1));
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  std::string text_;
  std::size_t pos_ = 0;
  int depth_ = 0;
  std::vector<std::string> vars_;
};

}  // namespace detail

// Words like "x^2", "[x,y]", "x*y*x^-1*y^-1"; "e" and "1" denote the identity.
inline ParsedWord parse_word(const std::string& text) { return detail::WordParser(text).run(); }

// The set {w(g1..gd)} as sorted ids.
inline std::vector<std::uint32_t> word_image(const WordExpr& w, unsigned arity, const FiniteGroup& g,
                                             const EngineOptions& options = {}) {
  const BigInt tuples = pow(BigInt(g.order()), arity);
  if (tuples > options.budget) fail(ErrorKind::BudgetExceeded, "|G|^d = " + to_string(tuples) + " exceeds the budget");
  const std::uint32_t n = g.order();
  if (arity == 0) return {w.eval(g, nullptr)};
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, n));
  std::vector<std::vector<char>> hits(workers, std::vector<char>(n, 0));
  std::atomic<std::uint32_t> next{0};
  auto work = [&](unsigned id) {
    std::vector<std::uint32_t> values(arity, 0);
    for (;;) {
      const std::uint32_t first = next.fetch_add(1);
      if (first >= n) break;
      values[0] = first;
      std::fill(values.begin() + 1, values.end(), 0);
      for (;;) {
        hits[id][w.eval(g, values.data())] = 1;
        std::size_t i = arity;
        bool done = true;
        while (i-- > 1) {
          if (++values[i] < n) {
            done = false;
            break;
          }
          values[i] = 0;
        }
        if (done) break;
      }
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> threads;
    for (unsigned i = 0; i < workers; ++i) threads.emplace_back(work, i);
    for (auto& t : threads) t.join();
  }
  std::vector<std::uint32_t> image;
  for (std::uint32_t a = 0; a < n; ++a) {
    bool hit = false;
    for (const auto& h : hits) hit = hit || h[a];
    if (hit) image.push_back(a);
  }
  return image;
}

inline std::vector<std::uint32_t> word_image(const ParsedWord& w, const FiniteGroup& g, const EngineOptions& options = {}) {
  return word_image(w.expr, w.arity(), g, options);
}

struct CoverResult {
  bool covers = false;
  std::vector<std::uint32_t> gap;
};

inline std::vector<std::uint32_t> set_product(const std::vector<std::uint32_t>& x, const std::vector<std::uint32_t>& y,
                                              const FiniteGroup& g) {
  std::vector<char> hit(g.order(), 0);
  for (auto a : x) {
    for (auto b : y) hit[g.mul(a, b)] = 1;
  }
  std::vector<std::uint32_t> out;
  for (std::uint32_t a = 0; a < g.order(); ++a) {
    if (hit[a]) out.push_back(a);
  }
  return out;
}

inline CoverResult triple_product_covers(const std::vector<std::uint32_t>& x1, const std::vector<std::uint32_t>& x2,
                                         const std::vector<std::uint32_t>& x3, const FiniteGroup& g) {
  for (const auto* x : {&x1, &x2, &x3}) {
    for (auto a : *x) {
      if (a >= g.order()) fail(ErrorKind::OutOfRange, "set element outside the group");
    }
  }
  const auto product = set_product(set_product(x1, x2, g), x3, g);
  CoverResult r;
  std::vector<char> in(g.order(), 0);
  for (auto a : product) in[a] = 1;
  for (std::uint32_t a = 0; a < g.order(); ++a) {
    if (!in[a]) r.gap.push_back(a);
  }
  r.covers = r.gap.empty();
  return r;
}

inline bool is_conjugation_invariant(const std::vector<std::uint32_t>& set, const FiniteGroup& g) {
  std::vector<char> in(g.order(), 0);
  for (auto a : set) in[a] = 1;
  for (auto a : set) {
    for (std::uint32_t h = 0; h < g.order(); ++h) {
      if (!in[g.mul(g.mul(h, a), g.inv(h))]) return false;
    }
  }
  return true;
}

}  // namespace pfdim

#endif  // PFDIM_GROUPS_HPP
