#ifndef PFDIM_FINITE_FIELD_HPP
#define PFDIM_FINITE_FIELD_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pfdim/error.hpp"

namespace pfdim {

// GF(q) for q in {2,3,4,5,7,8,9}. Elements are 0..q-1, read as base-p digit
// vectors of polynomial coefficients modulo a fixed irreducible polynomial.
class FiniteField {
 public:
  explicit FiniteField(unsigned q) : q_(q) {
    // Lowest-degree-first coefficients of x^k minus the reduction polynomial.
    std::vector<unsigned> modulus;
    switch (q) {
      case 2: case 3: case 5: case 7: p_ = q; k_ = 1; break;
      case 4: p_ = 2; k_ = 2; modulus = {1, 1}; break;     // x^2 = x + 1
      case 8: p_ = 2; k_ = 3; modulus = {1, 1, 0}; break;  // x^3 = x + 1
      case 9: p_ = 3; k_ = 2; modulus = {2, 0}; break;     // x^2 = -1
      default:
        if (!is_prime_power(q)) fail(ErrorKind::InvalidArgument, std::to_string(q) + " is not a prime power");
        fail(ErrorKind::OutOfRange, "field of order " + std::to_string(q) + " is not built in");
    }
    add_.assign(q_ * q_, 0);
    mul_.assign(q_ * q_, 0);
    for (unsigned a = 0; a < q_; ++a) {
      for (unsigned b = 0; b < q_; ++b) {
        add_[a * q_ + b] = encode(poly_add(decode(a), decode(b)));
        mul_[a * q_ + b] = encode(poly_mul(decode(a), decode(b), modulus));
      }
    }
    neg_.assign(q_, 0);
    inv_.assign(q_, 0);
    for (unsigned a = 0; a < q_; ++a) {
      for (unsigned b = 0; b < q_; ++b) {
        if (add_[a * q_ + b] == 0) neg_[a] = b;
        if (mul_[a * q_ + b] == 1) inv_[a] = b;
      }
    }
  }

  static bool is_prime_power(unsigned q) {
    if (q < 2) return false;
    unsigned p = 2;
    while (q % p != 0) ++p;
    while (q % p == 0) q /= p;
    return q == 1;
  }

  unsigned order() const { return q_; }
  unsigned characteristic() const { return p_; }
  unsigned add(unsigned a, unsigned b) const { return add_[a * q_ + b]; }
  unsigned sub(unsigned a, unsigned b) const { return add_[a * q_ + neg_[b]]; }
  unsigned mul(unsigned a, unsigned b) const { return mul_[a * q_ + b]; }
  unsigned neg(unsigned a) const { return neg_[a]; }
  unsigned inv(unsigned a) const {
    if (a == 0) fail(ErrorKind::InvalidArgument, "zero has no inverse");
    return inv_[a];
  }

  // Image of an integer under Z -> GF(q).
  unsigned from_int(long long n) const {
    long long r = n % static_cast<long long>(p_);
    if (r < 0) r += p_;
    return static_cast<unsigned>(r);
  }

 private:
  std::vector<unsigned> decode(unsigned a) const {
    std::vector<unsigned> d(k_, 0);
    for (unsigned i = 0; i < k_; ++i) {
      d[i] = a % p_;
      a /= p_;
    }
    return d;
  }

  unsigned encode(const std::vector<unsigned>& d) const {
    unsigned a = 0;
    for (unsigned i = k_; i-- > 0;) a = a * p_ + d[i];
    return a;
  }

  std::vector<unsigned> poly_add(const std::vector<unsigned>& a, const std::vector<unsigned>& b) const {
    std::vector<unsigned> c(k_);
    for (unsigned i = 0; i < k_; ++i) c[i] = (a[i] + b[i]) % p_;
    return c;
  }

  std::vector<unsigned> poly_mul(const std::vector<unsigned>& a, const std::vector<unsigned>& b,
                                 const std::vector<unsigned>& modulus) const {
    std::vector<unsigned> prod(2 * k_, 0);
    for (unsigned i = 0; i < k_; ++i) {
      for (unsigned j = 0; j < k_; ++j) prod[i + j] = (prod[i + j] + a[i] * b[j]) % p_;
    }
    // Reduce from the top using x^k = modulus.
    for (unsigned deg = 2 * k_ - 1; deg >= k_ && deg > 0; --deg) {
      const unsigned c = prod[deg];
      if (c == 0) continue;
      prod[deg] = 0;
      for (unsigned i = 0; i < k_; ++i) prod[deg - k_ + i] = (prod[deg - k_ + i] + c * modulus[i]) % p_;
    }
    prod.resize(k_);
    return prod;
  }

  unsigned q_ = 0;
  unsigned p_ = 0;
  unsigned k_ = 0;
  std::vector<unsigned> add_;
  std::vector<unsigned> mul_;
  std::vector<unsigned> neg_;
  std::vector<unsigned> inv_;
};

using FieldVector = std::vector<unsigned>;

// Row-reduces a copy of the vectors; returns the rank.
inline std::size_t rank_of(const FiniteField& f, std::vector<FieldVector> rows) {
  if (rows.empty()) return 0;
  const std::size_t dim = rows[0].size();
  for (const auto& r : rows) {
    if (r.size() != dim) fail(ErrorKind::InvalidArgument, "vectors from different ambient spaces");
  }
  std::size_t rank = 0;
  for (std::size_t col = 0; col < dim && rank < rows.size(); ++col) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][col] == 0) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[rank]);
    const unsigned inv = f.inv(rows[rank][col]);
    for (auto& x : rows[rank]) x = f.mul(x, inv);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank || rows[r][col] == 0) continue;
      const unsigned factor = rows[r][col];
      for (std::size_t c = 0; c < dim; ++c) rows[r][c] = f.sub(rows[r][c], f.mul(factor, rows[rank][c]));
    }
    ++rank;
  }
  return rank;
}

// Reduced row echelon form in place; returns the pivot columns.
inline std::vector<std::size_t> rref(const FiniteField& f, std::vector<FieldVector>& rows, std::size_t cols) {
  std::vector<std::size_t> pivots;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < cols && rank < rows.size(); ++col) {
    std::size_t pivot = rank;
    while (pivot < rows.size() && rows[pivot][col] == 0) ++pivot;
    if (pivot == rows.size()) continue;
    std::swap(rows[pivot], rows[rank]);
    const unsigned inv = f.inv(rows[rank][col]);
    for (auto& x : rows[rank]) x = f.mul(x, inv);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (r == rank || rows[r][col] == 0) continue;
      const unsigned factor = rows[r][col];
      for (std::size_t c = 0; c < rows[r].size(); ++c) rows[r][c] = f.sub(rows[r][c], f.mul(factor, rows[rank][c]));
    }
    pivots.push_back(col);
    ++rank;
  }
  rows.resize(rank);
  return pivots;
}

// Basis of {x in F^cols : row . x = 0 for every row}.
inline std::vector<FieldVector> null_space(const FiniteField& f, std::vector<FieldVector> rows, std::size_t cols) {
  const auto pivots = rref(f, rows, cols);
  std::vector<bool> is_pivot(cols, false);
  for (auto c : pivots) is_pivot[c] = true;
  std::vector<FieldVector> basis;
  for (std::size_t free = 0; free < cols; ++free) {
    if (is_pivot[free]) continue;
    FieldVector v(cols, 0);
    v[free] = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) v[pivots[r]] = f.neg(rows[r][free]);
    basis.push_back(std::move(v));
  }
  return basis;
}

inline unsigned dot(const FiniteField& f, const FieldVector& a, const FieldVector& b) {
  unsigned s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s = f.add(s, f.mul(a[i], b[i]));
  return s;
}

inline bool in_span(const FiniteField& f, const std::vector<FieldVector>& basis, const FieldVector& v) {
  std::vector<FieldVector> extended = basis;
  extended.push_back(v);
  return rank_of(f, basis) == rank_of(f, extended);
}

inline FieldVector vec_add(const FiniteField& f, const FieldVector& a, const FieldVector& b) {
  FieldVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = f.add(a[i], b[i]);
  return c;
}

inline FieldVector vec_sub(const FiniteField& f, const FieldVector& a, const FieldVector& b) {
  FieldVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = f.sub(a[i], b[i]);
  return c;
}

inline FieldVector vec_scale(const FiniteField& f, unsigned s, const FieldVector& a) {
  FieldVector c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = f.mul(s, a[i]);
  return c;
}

// Vectors of F^dim are numbered by their base-q digits, first coordinate lowest.
inline FieldVector vector_from_id(std::uint64_t id, unsigned q, unsigned dim) {
  FieldVector v(dim);
  for (unsigned i = 0; i < dim; ++i) {
    v[i] = static_cast<unsigned>(id % q);
    id /= q;
  }
  return v;
}

inline std::uint64_t vector_id(const FieldVector& v, unsigned q) {
  std::uint64_t id = 0;
  for (std::size_t i = v.size(); i-- > 0;) id = id * q + v[i];
  return id;
}

}  // namespace pfdim

#endif  // PFDIM_FINITE_FIELD_HPP
