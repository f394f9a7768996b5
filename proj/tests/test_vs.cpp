#include <gtest/gtest.h>

#include <random>

#include "pfdim/engine.hpp"
#include "pfdim/families.hpp"
#include "pfdim/parser.hpp"
#include "pfdim/vs_oracle.hpp"

using namespace pfdim;

namespace {

FieldVector e(unsigned i, unsigned dim) {
  FieldVector v(dim, 0);
  v[i] = 1;
  return v;
}

FieldVector random_vector(std::mt19937_64& rng, unsigned q, unsigned dim) {
  FieldVector v(dim);
  for (auto& c : v) c = static_cast<unsigned>(rng() % q);
  return v;
}

std::vector<unsigned> unit(std::size_t i, std::size_t n) {
  std::vector<unsigned> c(n, 0);
  c[i] = 1;
  return c;
}

}  // namespace

TEST(VectorSpaceOracle, SpanRank) {
  FiniteField f2(2);
  EXPECT_EQ(span_rank(f2, {e(0, 3), e(1, 3)}), 2u);
  EXPECT_EQ(span_rank(f2, {FieldVector(3, 0)}), 0u);
  EXPECT_EQ(span_rank(f2, {e(0, 3), e(1, 3), vec_add(f2, e(0, 3), e(1, 3))}), 2u);
  EXPECT_EQ(span_rank(2, 3, {1, 2, 3}), 2u);
  EXPECT_THROW(span_rank(f2, {e(0, 3), e(0, 2)}), Error);
}

TEST(VectorSpaceOracle, ThetaExamples) {
  FiniteField f2(2);
  // theta1(u + w1), w1 = e1 in F_2^3: first disjunct 8 - 2.
  auto t = count_theta_case(f2, 3, {{unit(0, 1)}, {}}, {e(0, 3)});
  EXPECT_EQ(t.first.value, 6);
  EXPECT_EQ(t.total.value, 7);
  EXPECT_EQ(t.total.value, brute_force_theta(f2, 3, {{unit(0, 1)}, {}}, {e(0, 3)}).value);
  FiniteField f3(3);
  auto s = count_theta_case(f3, 2, {{unit(0, 2)}, {unit(1, 2)}}, {e(0, 2), e(1, 2)});
  EXPECT_EQ(s.second.value, 6);
  EXPECT_EQ(s.second_poly, VFPolynomial::monomial(0, 2) - VFPolynomial::monomial(0, 1));
  auto shift = count_theta_case(f3, 2, {{unit(0, 2)}, {unit(0, 2)}}, {e(0, 2), e(1, 2)});
  EXPECT_EQ(shift.guard, ThetaGuard::ShiftDependent);
  EXPECT_EQ(shift.total.value, 6);
  auto d = count_theta_case(f3, 2, {{unit(0, 2), unit(0, 2)}, {}}, {e(0, 2), e(1, 2)});
  EXPECT_EQ(d.guard, ThetaGuard::Degenerate);
  EXPECT_EQ(d.total.value, 0);
}

// Exhaustive over parameter tuples for small shapes.
TEST(VectorSpaceOracle, ThetaMatchesBruteForce) {
  for (unsigned q : {2u, 3u}) {
    FiniteField f(q);
    for (unsigned dim : {2u, 3u}) {
      const auto vs = pow(BigInt(q), dim).convert_to<std::uint64_t>();
      for (std::size_t m = 0; m <= 2; ++m) {
        for (std::size_t mp = 0; mp + m <= 2 && mp + m >= 1; ++mp) {
          VectorTermSpec spec;
          for (std::size_t i = 0; i < m; ++i) spec.w.push_back(unit(i, m + mp));
          for (std::size_t i = 0; i < mp; ++i) spec.w_prime.push_back(unit(m + i, m + mp));
          std::uint64_t tuples = 1;
          for (std::size_t i = 0; i < m + mp; ++i) tuples *= vs;
          for (std::uint64_t code = 0; code < tuples; ++code) {
            std::vector<FieldVector> params;
            std::uint64_t rest = code;
            for (std::size_t i = 0; i < m + mp; ++i) {
              params.push_back(vector_from_id(rest % vs, q, dim));
              rest /= vs;
            }
            auto t = count_theta_case(f, dim, spec, params);
            ASSERT_EQ(t.total.value, brute_force_theta(f, dim, spec, params).value);
            EXPECT_EQ(t.poly.evaluate(BigInt(vs), BigInt(q)), Rational(t.total.value));
            EXPECT_EQ(t.first.value + t.second.value, t.total.value);
          }
        }
      }
    }
  }
}

// The engine on make_vector_space agrees on theta formulas.
TEST(VectorSpaceOracle, ThetaMatchesEngine) {
  auto m = make_vector_space(3, 2);
  FiniteField f(3);
  auto phi = parse_formula_or_throw("theta2(vadd(u, a), b)", m.signature());
  for (std::uint64_t a = 0; a < 9; ++a) {
    for (std::uint64_t b = 0; b < 9; ++b) {
      Assignment asg;
      asg.set("a", "V", static_cast<ElementId>(a));
      asg.set("b", "V", static_cast<ElementId>(b));
      const std::vector<FieldVector> params{vector_from_id(a, 3, 2), vector_from_id(b, 3, 2)};
      EXPECT_EQ(count(phi, m, asg, {"u"}).value, count_theta_case(f, 2, {{unit(0, 2)}, {unit(1, 2)}}, params).total.value);
    }
  }
}

TEST(VectorSpaceOracle, CosetDifferenceExamples) {
  FiniteField f2(2);
  CosetCountSpec hyper{{}, {{FieldVector(3, 0), {e(0, 3), e(1, 3)}}}};
  auto c = count_coset_difference(f2, 3, hyper);
  EXPECT_EQ(c.count.value, 4);
  EXPECT_EQ(c.poly, VFPolynomial::monomial(1, 0) - VFPolynomial::monomial(0, 2));
  EXPECT_EQ(hyper.kind(), "complement-of-span");
  CosetCountSpec line{{{e(2, 3), {e(0, 3)}}}, {}};
  auto l = count_coset_difference(f2, 3, line);
  EXPECT_EQ(l.count.value, 2);
  EXPECT_EQ(l.poly, VFPolynomial::monomial(0, 1));
  CosetCountSpec covered{{{e(2, 3), {e(0, 3)}}}, {{FieldVector(3, 0), {e(0, 3), e(2, 3)}}}};
  EXPECT_EQ(count_coset_difference(f2, 3, covered).count.value, 0);
}

TEST(VectorSpaceOracle, CosetDifferenceMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 600; ++trial) {
    const unsigned q = trial % 2 ? 3 : 2;
    const unsigned dim = 2 + static_cast<unsigned>(rng() % 3);
    FiniteField f(q);
    CosetCountSpec spec;
    const std::size_t l = rng() % 3, k = rng() % 3;
    auto coset = [&] {
      AffineCoset c{random_vector(rng, q, dim), {}};
      const std::size_t s = rng() % dim;
      for (std::size_t i = 0; i < s; ++i) c.span.push_back(random_vector(rng, q, dim));
      return c;
    };
    for (std::size_t i = 0; i < l; ++i) spec.include.push_back(coset());
    for (std::size_t i = 0; i < k; ++i) spec.exclude.push_back(coset());
    auto c = count_coset_difference(f, dim, spec);
    ASSERT_EQ(c.count.value, brute_force_coset_difference(f, dim, spec).value);
    EXPECT_EQ(c.poly.evaluate(pow(BigInt(q), dim), BigInt(q)), Rational(c.count.value));
  }
}

TEST(VectorSpaceOracle, ThetaConjunctions) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const unsigned q = trial % 2 ? 3 : 2;
    const unsigned dim = 2 + static_cast<unsigned>(rng() % 2);
    FiniteField f(q);
    std::vector<FieldVector> params;
    for (int i = 0; i < 3; ++i) params.push_back(random_vector(rng, q, dim));
    std::vector<ThetaLiteral> lits;
    const int count = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < count; ++i) {
      ThetaLiteral lit;
      const std::size_t m = 1 + rng() % 2, mp = rng() % 2;
      for (std::size_t j = 0; j < m + mp; ++j) {
        std::vector<unsigned> c(3);
        for (auto& x : c) x = static_cast<unsigned>(rng() % q);
        (j < m ? lit.spec.w : lit.spec.w_prime).push_back(c);
      }
      lit.negated = rng() % 2;
      lits.push_back(lit);
    }
    EXPECT_EQ(count_theta_conjunction(f, dim, lits, params).count.value, brute_force_theta_conjunction(f, dim, lits, params).value);
  }
}

TEST(VectorSpaceOracle, FiberCompose) {
  const GuardedVF v{VFPolynomial::monomial(1, 0), always_guard()};
  const GuardedVF fpoly{VFPolynomial::monomial(0, 1), always_guard()};
  auto single = fiber_compose({v}, {{fpoly}});
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].poly, VFPolynomial::monomial(1, 1));
  auto identity = fiber_compose({{VFPolynomial::constant(1), always_guard()}}, {{fpoly}});
  EXPECT_EQ(identity[0].poly, fpoly.poly);

  VSGuard even{"p0 zero", [](const VSSample& s) { return s.params[0][0] == 0; }};
  VSGuard odd{"p0 nonzero", [](const VSSample& s) { return s.params[0][0] != 0; }};
  std::vector<VSSample> samples;
  for (unsigned c = 0; c < 3; ++c) samples.push_back({{3, 1}, {{c}}});
  std::vector<GuardedVF> outer{{VFPolynomial::monomial(1, 0), even}, {VFPolynomial::constant(1), odd}};
  std::vector<std::vector<GuardedVF>> inner{{{VFPolynomial::monomial(0, 1), even}, {VFPolynomial::constant(2), odd}},
                                            {{VFPolynomial::constant(3), even}, {VFPolynomial::monomial(0, 2), odd}}};
  auto four = fiber_compose(outer, inner, samples);
  EXPECT_EQ(four.size(), 4u);
  for (const auto& s : samples) {
    int firing = 0;
    for (const auto& g : four) firing += g.guard.holds(s);
    EXPECT_EQ(firing, 1);
  }
  std::vector<std::vector<GuardedVF>> broken{{{VFPolynomial::constant(1), even}}, {{VFPolynomial::constant(1), odd}}};
  EXPECT_THROW(fiber_compose(outer, broken, samples), Error);
}

TEST(VectorSpaceOracle, DisjointNormalization) {
  // (a & b) | a | !b over two atoms: sign vectors {11, 10, 00}.
  auto out = disjoint_sign_vectors({{1, 2}, {1}, {-2}}, 2);
  EXPECT_EQ(out.size(), 3u);
}

TEST(VectorSpaceOracle, PolynomialJson) {
  VFPolynomial p = VFPolynomial::monomial(1, 0) - VFPolynomial::monomial(0, 2, Rational(1, 2));
  EXPECT_EQ(VFPolynomial::from_json(p.to_json()), p);
  EXPECT_EQ(p.to_string(), "V - 1/2*F^2");
}
