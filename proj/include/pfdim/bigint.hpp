#ifndef PFDIM_BIGINT_HPP
#define PFDIM_BIGINT_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

#include "pfdim/error.hpp"

namespace pfdim {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline BigInt pow(BigInt base, unsigned exponent) {
  BigInt result = 1;
  while (exponent > 0) {
    if (exponent & 1u) result *= base;
    exponent >>= 1u;
    if (exponent > 0) base *= base;
  }
  return result;
}

inline Rational pow(Rational base, unsigned exponent) {
  Rational result = 1;
  while (exponent > 0) {
    if (exponent & 1u) result *= base;
    exponent >>= 1u;
    if (exponent > 0) base *= base;
  }
  return result;
}

// Natural log of a nonnegative big integer; -inf for zero. Uses the top 62
// bits as a double mantissa, so relative error stays near machine epsilon.
inline double log_of(const BigInt& value) {
  if (value < 0) fail(ErrorKind::InvalidArgument, "log of negative integer");
  if (value == 0) return kNegInf;
  const unsigned msb = boost::multiprecision::msb(value);
  if (msb < 62) return std::log(value.convert_to<double>());
  const unsigned shift = msb - 61;
  const BigInt top = value >> shift;
  return std::log(top.convert_to<double>()) + static_cast<double>(shift) * std::log(2.0);
}

inline std::string to_string(const BigInt& value) { return value.str(); }

// Rationals serialize as "p/q", or "p" when the denominator is one.
inline std::string to_string(const Rational& value) {
  const BigInt num = boost::multiprecision::numerator(value);
  const BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline BigInt parse_bigint(std::string_view text) {
  if (text.empty()) fail(ErrorKind::InvalidArgument, "empty integer literal");
  std::size_t start = (text[0] == '-' || text[0] == '+') ? 1 : 0;
  if (start == text.size()) fail(ErrorKind::InvalidArgument, "malformed integer '" + std::string(text) + "'");
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] < '0' || text[i] > '9') {
      fail(ErrorKind::InvalidArgument, "malformed integer '" + std::string(text) + "'");
    }
  }
  BigInt value(std::string(text.substr(start)));
  return text[0] == '-' ? BigInt(-value) : value;
}

inline Rational parse_rational(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) return Rational(parse_bigint(text));
  const BigInt num = parse_bigint(text.substr(0, slash));
  const BigInt den = parse_bigint(text.substr(slash + 1));
  if (den == 0) fail(ErrorKind::InvalidArgument, "zero denominator in '" + std::string(text) + "'");
  return Rational(num, den);
}

// An exact cardinality with its natural log cached for dimension reasoning.
struct Count {
  BigInt value;
  double log_value = kNegInf;

  Count() = default;
  explicit Count(BigInt v) : value(std::move(v)), log_value(log_of(value)) {}

  bool is_zero() const { return value == 0; }
  friend bool operator==(const Count& a, const Count& b) { return a.value == b.value; }
};

}  // namespace pfdim

#endif  // PFDIM_BIGINT_HPP
