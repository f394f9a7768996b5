#ifndef PFDIM_PARSER_HPP
#define PFDIM_PARSER_HPP

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pfdim/error.hpp"
#include "pfdim/formula.hpp"
#include "pfdim/signature.hpp"

namespace pfdim {

struct ParseDiagnostic {
  std::size_t offset = 0;
  std::size_t line = 1;
  std::size_t column = 1;
  // "syntax", or one of the sort diagnostic kinds.
  std::string kind = "syntax";
  std::string message;
  std::vector<std::string> expected;

  std::string to_string() const {
    std::string out = std::to_string(line) + ":" + std::to_string(column) + ": " + message;
    if (!expected.empty()) {
      out += " (expected ";
      for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) out += ", ";
        out += expected[i];
      }
      out += ")";
    }
    return out;
  }
};

struct ParseOptions {
  // Sorts for free variables whose sort cannot be read off an atom.
  std::map<std::string, std::string> free_sorts;
  std::size_t max_depth = 256;
};

struct ParseResult {
  std::optional<Formula> formula;
  std::optional<ParseDiagnostic> diagnostic;

  explicit operator bool() const { return formula.has_value(); }
};

namespace detail {

struct Token {
  enum class Kind { Ident, LParen, RParen, Comma, Dot, Colon, And, Or, Not, Arrow, Equals, End };
  Kind kind;
  std::size_t offset;
  std::string text;
};

inline std::string_view token_name(Token::Kind k) {
  switch (k) {
    case Token::Kind::Ident: return "identifier";
    case Token::Kind::LParen: return "'('";
    case Token::Kind::RParen: return "')'";
    case Token::Kind::Comma: return "','";
    case Token::Kind::Dot: return "'.'";
    case Token::Kind::Colon: return "':'";
    case Token::Kind::And: return "'&'";
    case Token::Kind::Or: return "'|'";
    case Token::Kind::Not: return "'!'";
    case Token::Kind::Arrow: return "'->'";
    case Token::Kind::Equals: return "'='";
    case Token::Kind::End: return "end of input";
  }
  return "token";
}

struct ParseFailure {
  std::size_t offset;
  std::string message;
  std::vector<std::string> expected;
};

class FormulaParser {
 public:
  FormulaParser(std::string_view text, const Signature& sig, const ParseOptions& options)
      : text_(text), sig_(sig), options_(options) {}

  ParseResult run() {
    ParseResult result;
    if (auto failure = tokenize()) {
      result.diagnostic = make_diagnostic(*failure);
      return result;
    }
    try {
      Formula f = implication();
      if (peek().kind != Token::Kind::End) {
        throw ParseFailure{peek().offset, "unexpected " + describe(peek()), {"'&'", "'|'", "'->'", "end of input"}};
      }
      if (auto failure = infer_sorts(f)) {
        result.diagnostic = make_diagnostic(*failure);
        result.diagnostic->kind = "sort-mismatch";
        // An unknown symbol is the more useful report when it explains the gap.
        if (auto unknown = unknown_symbol(f)) {
          result.diagnostic->kind = "unknown-symbol";
          result.diagnostic->message = *unknown;
        }
        return result;
      }
      if (auto d = sort_check(f, sig_)) {
        ParseDiagnostic diag;
        diag.kind = std::string(to_string(d->kind));
        diag.message = d->message;
        result.diagnostic = diag;
        return result;
      }
      result.formula = std::move(f);
    } catch (const ParseFailure& failure) {
      result.diagnostic = make_diagnostic(failure);
    }
    return result;
  }

 private:
  std::optional<ParseFailure> tokenize() {
    std::size_t i = 0;
    while (i < text_.size()) {
      const unsigned char c = static_cast<unsigned char>(text_[i]);
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        ++i;
        continue;
      }
      if (std::isalpha(c) || c == '_') {
        std::size_t j = i + 1;
        while (j < text_.size()) {
          const unsigned char d = static_cast<unsigned char>(text_[j]);
          if (!(std::isalnum(d) || d == '_')) break;
          ++j;
        }
        tokens_.push_back({Token::Kind::Ident, i, std::string(text_.substr(i, j - i))});
        i = j;
        continue;
      }
      Token::Kind kind;
      std::size_t width = 1;
      switch (c) {
        case '(': kind = Token::Kind::LParen; break;
        case ')': kind = Token::Kind::RParen; break;
        case ',': kind = Token::Kind::Comma; break;
        case '.': kind = Token::Kind::Dot; break;
        case ':': kind = Token::Kind::Colon; break;
        case '&': kind = Token::Kind::And; break;
        case '|': kind = Token::Kind::Or; break;
        case '!': kind = Token::Kind::Not; break;
        case '=': kind = Token::Kind::Equals; break;
        case '-':
          if (i + 1 < text_.size() && text_[i + 1] == '>') {
            kind = Token::Kind::Arrow;
            width = 2;
            break;
          }
          return ParseFailure{i, "unexpected character '-'", {"'->'"}};
        default: {
          std::string shown = (c >= 0x20 && c < 0x7f) ? std::string(1, static_cast<char>(c)) : "byte " + std::to_string(c);
          return ParseFailure{i, "unexpected character " + shown, {}};
        }
      }
      tokens_.push_back({kind, i, std::string(text_.substr(i, width))});
      i += width;
    }
    tokens_.push_back({Token::Kind::End, text_.size(), ""});
    return std::nullopt;
  }

  ParseDiagnostic make_diagnostic(const ParseFailure& failure) const {
    ParseDiagnostic d;
    d.offset = std::min(failure.offset, text_.size());
    d.message = failure.message;
    d.expected = failure.expected;
    for (std::size_t i = 0; i < d.offset; ++i) {
      if (text_[i] == '\n') {
        ++d.line;
        d.column = 1;
      } else {
        ++d.column;
      }
    }
    return d;
  }

  const Token& peek() const { return tokens_[pos_]; }
  const Token& advance() { return tokens_[pos_++]; }

  static std::string describe(const Token& t) {
    if (t.kind == Token::Kind::Ident) return "identifier '" + t.text + "'";
    return std::string(token_name(t.kind));
  }

  const Token& expect(Token::Kind kind, const std::string& context) {
    if (peek().kind != kind) {
      throw ParseFailure{peek().offset, "expected " + std::string(token_name(kind)) + " " + context + ", found " + describe(peek()),
                         {std::string(token_name(kind))}};
    }
    return advance();
  }

  struct DepthGuard {
    FormulaParser& p;
    explicit DepthGuard(FormulaParser& parser, std::size_t offset) : p(parser) {
      if (++p.depth_ > p.options_.max_depth) throw ParseFailure{offset, "nesting too deep", {}};
    }
    ~DepthGuard() { --p.depth_; }
  };

  Formula implication() {
    DepthGuard guard(*this, peek().offset);
    Formula lhs = disjunction();
    if (peek().kind == Token::Kind::Arrow) {
      advance();
      Formula rhs = implication();
      return Formula::implies(std::move(lhs), std::move(rhs));
    }
    return lhs;
  }

  Formula disjunction() {
    Formula lhs = conjunction();
    while (peek().kind == Token::Kind::Or) {
      advance();
      lhs = Formula::disj(std::move(lhs), conjunction());
    }
    return lhs;
  }

  Formula conjunction() {
    Formula lhs = unary();
    while (peek().kind == Token::Kind::And) {
      advance();
      lhs = Formula::conj(std::move(lhs), unary());
    }
    return lhs;
  }

  Formula unary() {
    DepthGuard guard(*this, peek().offset);
    const Token& t = peek();
    if (t.kind == Token::Kind::Not) {
      advance();
      return Formula::negate(unary());
    }
    if (t.kind == Token::Kind::LParen) {
      advance();
      Formula inner = implication();
      expect(Token::Kind::RParen, "to close '('");
      return inner;
    }
    if (t.kind == Token::Kind::Ident && (t.text == "forall" || t.text == "exists")) {
      const bool is_forall = t.text == "forall";
      advance();
      const Token& var = expect(Token::Kind::Ident, "after quantifier");
      if (var.text == "forall" || var.text == "exists") {
        throw ParseFailure{var.offset, "keyword used as variable name", {"identifier"}};
      }
      expect(Token::Kind::Colon, "after bound variable");
      const Token& sort = expect(Token::Kind::Ident, "as the sort of '" + var.text + "'");
      expect(Token::Kind::Dot, "after quantifier prefix");
      scope_.emplace_back(var.text, sort.text);
      Formula body = implication();
      scope_.pop_back();
      return is_forall ? Formula::forall(var.text, sort.text, std::move(body))
                       : Formula::exists(var.text, sort.text, std::move(body));
    }
    if (t.kind == Token::Kind::Ident) return atom();
    throw ParseFailure{t.offset, "unexpected " + describe(t), {"'!'", "'('", "'forall'", "'exists'", "identifier"}};
  }

  Formula atom() {
    const Token& head = peek();
    if (tokens_[pos_ + 1].kind == Token::Kind::LParen && sig_.find_relation(head.text)) {
      advance();
      advance();
      std::vector<Term> args = term_list();
      return Formula::rel(head.text, std::move(args));
    }
    Term lhs = term();
    if (peek().kind == Token::Kind::Equals) {
      advance();
      Term rhs = term();
      return Formula::eq(std::move(lhs), std::move(rhs));
    }
    // An unknown symbol applied to arguments reads as a relation atom so the
    // sort checker can name it.
    if (lhs.kind == Term::Kind::Apply && !sig_.find_function(lhs.name)) {
      return Formula::rel(lhs.name, std::move(lhs.args));
    }
    throw ParseFailure{peek().offset, "expected '=' after term, found " + describe(peek()), {"'='"}};
  }

  std::vector<Term> term_list() {
    std::vector<Term> args;
    args.push_back(term());
    while (peek().kind == Token::Kind::Comma) {
      advance();
      args.push_back(term());
    }
    expect(Token::Kind::RParen, "to close argument list");
    return args;
  }

  Term term() {
    DepthGuard guard(*this, peek().offset);
    const Token& t = expect(Token::Kind::Ident, "as a term");
    if (t.text == "forall" || t.text == "exists") {
      throw ParseFailure{t.offset, "keyword used as a term", {"identifier"}};
    }
    if (peek().kind == Token::Kind::LParen) {
      advance();
      std::vector<Term> args = term_list();
      std::string sort;
      if (auto f = sig_.find_function(t.text)) sort = sig_.sort_name(sig_.functions()[*f].result);
      return Term::apply(t.text, sort, std::move(args));
    }
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == t.text) return Term::var(t.text, it->second);
    }
    if (auto c = sig_.find_constant(t.text)) {
      return Term::constant(t.text, sig_.sort_name(sig_.constants()[*c].sort));
    }
    Term v = Term::var(t.text, "");
    free_offsets_.emplace(t.text, t.offset);
    return v;
  }

  // Free variables get the sort of the first position that constrains them.
  std::optional<ParseFailure> infer_sorts(Formula& f) {
    std::map<std::string, std::string> sorts = options_.free_sorts;
    for (bool changed = true; changed;) {
      changed = false;
      std::vector<std::string> bound;
      constrain(f, bound, sorts, changed);
    }
    for (const auto& [name, offset] : free_offsets_) {
      if (sorts.count(name)) continue;
      if (sig_.sorts().size() == 1) {
        sorts[name] = sig_.sorts()[0];
      } else {
        return ParseFailure{offset, "cannot infer the sort of free variable '" + name + "'", {}};
      }
    }
    std::vector<std::string> bound;
    assign(f, bound, sorts);
    return std::nullopt;
  }

  std::optional<std::string> unknown_symbol_in(const Term& t) const {
    if (t.kind == Term::Kind::Apply) {
      if (!sig_.find_function(t.name)) return "unknown function '" + t.name + "'";
      for (const auto& a : t.args) {
        if (auto u = unknown_symbol_in(a)) return u;
      }
    }
    return std::nullopt;
  }

  std::optional<std::string> unknown_symbol(const Formula& f) const {
    if (f.kind == Formula::Kind::Rel && !sig_.find_relation(f.name)) return "unknown relation '" + f.name + "'";
    if (f.is_quantifier() && !sig_.find_sort(f.sort)) return "unknown sort '" + f.sort + "'";
    for (const auto& t : f.terms) {
      if (auto u = unknown_symbol_in(t)) return u;
    }
    for (const auto& c : f.children) {
      if (auto u = unknown_symbol(c)) return u;
    }
    return std::nullopt;
  }

  static bool is_free(const Term& t, const std::vector<std::string>& bound) {
    if (t.kind != Term::Kind::Var) return false;
    for (const auto& b : bound) {
      if (b == t.name) return false;
    }
    return true;
  }

  std::string sort_of(const Term& t, const std::vector<std::string>& bound,
                      const std::map<std::string, std::string>& sorts) const {
    if (is_free(t, bound)) {
      auto it = sorts.find(t.name);
      return it == sorts.end() ? std::string() : it->second;
    }
    return t.sort;
  }

  void require(const Term& t, const std::string& sort, const std::vector<std::string>& bound,
               std::map<std::string, std::string>& sorts, bool& changed) const {
    if (sort.empty()) return;
    if (is_free(t, bound) && !sorts.count(t.name)) {
      sorts[t.name] = sort;
      changed = true;
    }
  }

  void constrain_term(const Term& t, std::vector<std::string>& bound, std::map<std::string, std::string>& sorts,
                      bool& changed) const {
    if (t.kind != Term::Kind::Apply) return;
    auto f = sig_.find_function(t.name);
    for (std::size_t i = 0; i < t.args.size(); ++i) {
      if (f && i < sig_.functions()[*f].args.size()) {
        require(t.args[i], sig_.sort_name(sig_.functions()[*f].args[i]), bound, sorts, changed);
      }
      constrain_term(t.args[i], bound, sorts, changed);
    }
  }

  void constrain(const Formula& f, std::vector<std::string>& bound, std::map<std::string, std::string>& sorts,
                 bool& changed) const {
    switch (f.kind) {
      case Formula::Kind::Rel: {
        auto r = sig_.find_relation(f.name);
        for (std::size_t i = 0; i < f.terms.size(); ++i) {
          if (r && i < sig_.relations()[*r].args.size()) {
            require(f.terms[i], sig_.sort_name(sig_.relations()[*r].args[i]), bound, sorts, changed);
          }
          constrain_term(f.terms[i], bound, sorts, changed);
        }
        return;
      }
      case Formula::Kind::Eq:
        constrain_term(f.terms[0], bound, sorts, changed);
        constrain_term(f.terms[1], bound, sorts, changed);
        require(f.terms[0], sort_of(f.terms[1], bound, sorts), bound, sorts, changed);
        require(f.terms[1], sort_of(f.terms[0], bound, sorts), bound, sorts, changed);
        return;
      case Formula::Kind::Exists:
      case Formula::Kind::Forall:
        bound.push_back(f.name);
        constrain(f.children[0], bound, sorts, changed);
        bound.pop_back();
        return;
      default:
        for (const auto& c : f.children) constrain(c, bound, sorts, changed);
    }
  }

  void assign_term(Term& t, std::vector<std::string>& bound, const std::map<std::string, std::string>& sorts) const {
    if (is_free(t, bound)) {
      t.sort = sorts.at(t.name);
      return;
    }
    for (auto& a : t.args) assign_term(a, bound, sorts);
  }

  void assign(Formula& f, std::vector<std::string>& bound, const std::map<std::string, std::string>& sorts) const {
    if (f.is_quantifier()) {
      bound.push_back(f.name);
      assign(f.children[0], bound, sorts);
      bound.pop_back();
      return;
    }
    for (auto& t : f.terms) assign_term(t, bound, sorts);
    for (auto& c : f.children) assign(c, bound, sorts);
  }

  std::string_view text_;
  const Signature& sig_;
  const ParseOptions& options_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t depth_ = 0;
  std::vector<std::pair<std::string, std::string>> scope_;
  std::map<std::string, std::size_t> free_offsets_;
};

}  // namespace detail

inline ParseResult parse_formula(std::string_view text, const Signature& sig, const ParseOptions& options = {}) {
  detail::FormulaParser parser(text, sig, options);
  return parser.run();
}

// Convenience wrapper for callers that treat a bad formula as an input error.
inline Formula parse_formula_or_throw(std::string_view text, const Signature& sig, const ParseOptions& options = {}) {
  ParseResult r = parse_formula(text, sig, options);
  if (!r) fail(ErrorKind::InvalidArgument, "cannot parse formula: " + r.diagnostic->to_string());
  return std::move(*r.formula);
}

}  // namespace pfdim

#endif  // PFDIM_PARSER_HPP
