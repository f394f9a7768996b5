#ifndef PFDIM_ERROR_HPP
#define PFDIM_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfdim {

enum class ErrorKind {
  Io,
  Schema,
  InvariantViolation,
  UnknownSymbol,
  ArityMismatch,
  SortMismatch,
  MissingAssignment,
  VariableOverlap,
  BudgetExceeded,
  UnknownFamily,
  OutOfRange,
  SelectorFailure,
  InvalidArgument,
  IndexMismatch,
  HypothesisViolation,
  TooFewEvents,
  NonExhaustiveGuards,
  NegativeExponent,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io-error";
    case ErrorKind::Schema: return "schema-error";
    case ErrorKind::InvariantViolation: return "invariant-violation";
    case ErrorKind::UnknownSymbol: return "unknown-symbol";
    case ErrorKind::ArityMismatch: return "arity-mismatch";
    case ErrorKind::SortMismatch: return "sort-mismatch";
    case ErrorKind::MissingAssignment: return "missing-assignment";
    case ErrorKind::VariableOverlap: return "variable-overlap";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::UnknownFamily: return "unknown-family";
    case ErrorKind::OutOfRange: return "out-of-range";
    case ErrorKind::SelectorFailure: return "selector-failure";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::IndexMismatch: return "index-mismatch";
    case ErrorKind::HypothesisViolation: return "hypothesis-violation";
    case ErrorKind::TooFewEvents: return "too-few-events";
    case ErrorKind::NonExhaustiveGuards: return "non-exhaustive-guards";
    case ErrorKind::NegativeExponent: return "negative-exponent";
  }
  return "error";
}

// Every failure surfaced by the library carries a kind so callers (and the
// CLI) can tell input problems from budget or hypothesis problems.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace pfdim

#endif  // PFDIM_ERROR_HPP
