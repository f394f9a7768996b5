#include <gtest/gtest.h>

#include "pfdim/families.hpp"
#include "pfdim/groups.hpp"
#include "pfdim/parser.hpp"

using namespace pfdim;

TEST(Families, EarlyExampleSizes) {
  FamilyHandle fam("earlyexample");
  auto m = fam.generate(3);
  EXPECT_EQ(m.sort_size(0), 14u);
  auto f = parse_formula_or_throw("E(x,y)", m.signature());
  Assignment a;
  a.set("y", "S", 10);
  EXPECT_EQ(count(f, m, a, {"x"}).value, 9);
  for (long long k = 1; k <= 12; ++k) EXPECT_EQ(fam.universe_size(k), k * (k + 1) * (2 * k + 1) / 6);
}

TEST(Families, Rank2ClassesAndConvSupersimple) {
  FamilyHandle r2("rank2classes");
  EXPECT_EQ(r2.generate(3).sort_size(0), 18u);
  FamilyHandle conv("convsupersimple");
  auto m = conv.generate(2);
  EXPECT_EQ(m.sort_size(0), 4u);
  auto p1 = parse_formula_or_throw("P1(x)", m.signature());
  auto p2 = parse_formula_or_throw("P2(x)", m.signature());
  auto p3 = parse_formula_or_throw("P3(x)", m.signature());
  EXPECT_EQ(count(p1, m, {}, {"x"}).value, 2);
  EXPECT_EQ(count(p2, m, {}, {"x"}).value, 1);
  EXPECT_EQ(count(p3, m, {}, {"x"}).value, 0);
}

TEST(Families, ClosedFormsAcrossIndices) {
  FamilyHandle conv("convsupersimple");
  for (unsigned n = 1; n <= 9; ++n) {
    auto b = conv.blocks(n);
    EXPECT_EQ(b.sort_size(0), pow(BigInt(n), n));
    for (unsigned i = 1; i <= std::min(n, 8u); ++i) {
      auto f = parse_formula_or_throw("P" + std::to_string(i) + "(x)", b.signature());
      EXPECT_EQ(block_count(f, b, {}, {"x"}).value, pow(BigInt(n), n - i)) << n << " " << i;
    }
  }
  FamilyHandle stable("stablenonattainability");
  FamilyHandle fd("findelta");
  for (unsigned n = 1; n <= 10; ++n) {
    BigInt s = 0;
    for (unsigned i = 1; i <= n; ++i) s += pow(BigInt(n), i);
    EXPECT_EQ(stable.universe_size(n), s);
    EXPECT_EQ(fd.universe_size(n), s * n);
    EXPECT_EQ(FamilyHandle("rank2classes").universe_size(n), 2 * n * n);
  }
}

TEST(Families, CountFamilySequences) {
  FamilyHandle stable("stablenonattainability");
  auto f = parse_formula_or_throw("E(x,y)", stable.blocks(4).signature());
  auto seq = count_family(f, stable, {4, 8}, {{"y", "class-rank-1"}});
  ASSERT_EQ(seq.entries.size(), 2u);
  EXPECT_EQ(seq.entries[0].second.value, 64);
  EXPECT_EQ(seq.entries[1].second.value, 2097152);
  FamilyHandle early("earlyexample");
  auto g = parse_formula_or_throw("x=x", early.blocks(2).signature());
  auto s2 = count_family(g, early, {2, 3}, {});
  EXPECT_EQ(s2.entries[0].second.value, 5);
  EXPECT_EQ(s2.entries[1].second.value, 14);
  auto z = parse_formula_or_throw("!(x=x)", early.blocks(2).signature());
  for (const auto& [i, c] : count_family(z, early, {1, 2, 5}, {}).entries) EXPECT_TRUE(c.is_zero());
}

TEST(Families, SelectorsAndErrors) {
  FamilyHandle stable("stablenonattainability");
  EXPECT_THROW(stable.select("class-rank-9", 4), Error);
  EXPECT_THROW(FamilyHandle("nope"), Error);
  EXPECT_THROW(stable.blocks(0), Error);
  try {
    stable.select("bogus", 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SelectorFailure);
  }
  FamilyHandle early("earlyexample");
  EXPECT_EQ(early.select_id("class-3", 3), 5u);
  EXPECT_EQ(early.select_id("element-10", 3), 10u);
}

TEST(VectorSpace, ThetaRelations) {
  auto m = make_vector_space(2, 3);
  EXPECT_EQ(m.sort_size(1), 8u);
  // e1 = 1, e2 = 2, e1 + e2 = 3 in base-2 digits.
  EXPECT_TRUE(m.holds("theta2", {1, 2}));
  EXPECT_FALSE(m.holds("theta1", {0}));
  EXPECT_FALSE(m.holds("theta3", {1, 2, 3}));
  EXPECT_TRUE(m.holds("theta3", {1, 2, 4}));
  EXPECT_THROW(make_vector_space(6, 2), Error);
}

// theta_n agrees with "no nontrivial combination vanishes" for small spaces.
TEST(VectorSpace, ThetaMatchesCombinationTest) {
  for (unsigned q : {2u, 3u, 4u}) {
    for (unsigned dim = 1; dim <= 3; ++dim) {
      auto m = make_vector_space(q, dim);
      FiniteField f(q);
      const auto vs = m.sort_size(1);
      for (unsigned k = 1; k <= std::min(dim, 2u); ++k) {
        std::vector<ElementId> t(k, 0);
        for (std::uint64_t code = 0; code < (k == 1 ? vs : vs * vs); ++code) {
          t[0] = static_cast<ElementId>(code % vs);
          if (k == 2) t[1] = static_cast<ElementId>(code / vs);
          bool independent = true;
          std::uint64_t combos = k == 1 ? q : q * q;
          for (std::uint64_t c = 1; c < combos; ++c) {
            FieldVector sum(dim, 0);
            std::uint64_t rest = c;
            for (unsigned i = 0; i < k; ++i) {
              sum = vec_add(f, sum, vec_scale(f, static_cast<unsigned>(rest % q), vector_from_id(t[i], q, dim)));
              rest /= q;
            }
            if (vector_id(sum, q) == 0) independent = false;
          }
          EXPECT_EQ(m.holds("theta" + std::to_string(k), t), independent);
        }
      }
    }
  }
}

TEST(VectorSpace, FieldAxiomsSpotCheck) {
  for (unsigned q : {2u, 3u, 4u, 5u, 7u, 8u, 9u}) {
    FiniteField f(q);
    for (unsigned a = 0; a < q; ++a) {
      if (a) EXPECT_EQ(f.mul(a, f.inv(a)), 1u);
      EXPECT_EQ(f.add(a, f.neg(a)), 0u);
      for (unsigned b = 0; b < q; ++b) {
        for (unsigned c = 0; c < q; ++c) {
          EXPECT_EQ(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
          EXPECT_EQ(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        }
      }
    }
  }
}

TEST(Homocyclic, OrdersAndAxioms) {
  EXPECT_EQ(make_homocyclic(2, 2, 1).sort_size(0), 4u);
  EXPECT_EQ(make_homocyclic(2, 3, 2).sort_size(0), 64u);
  auto m = make_homocyclic(3, 1, 2);
  EXPECT_EQ(m.sort_size(0), 9u);
  for (ElementId a = 0; a < 9; ++a) {
    const ElementId a2 = m.apply("add", {a, a});
    EXPECT_EQ(m.apply("add", {a2, a}), 0u);
  }
  for (auto [p, n, k] : std::vector<std::array<unsigned, 3>>{{2, 3, 2}, {3, 1, 2}, {2, 2, 3}, {2, 1, 6}}) {
    auto g = FiniteGroup::from_structure([&] {
      // Re-label add/neg/zero as mul/inv/e.
      auto h = make_homocyclic(p, n, k);
      Signature sig;
      const SortId s = sig.add_sort("G");
      sig.add_function("mul", {s, s}, s);
      StructureBuilder b(sig, {h.sort_size(0)});
      std::vector<ElementId> table;
      for (ElementId a = 0; a < h.sort_size(0); ++a)
        for (ElementId c = 0; c < h.sort_size(0); ++c) table.push_back(h.apply("add", {a, c}));
      b.set_function_table("mul", table);
      return b.build();
    }());
    EXPECT_TRUE(g.is_associative());
    EXPECT_EQ(g.identity(), 0u);
  }
  EXPECT_THROW(make_homocyclic(4, 1, 1), Error);
  EXPECT_THROW(make_homocyclic(3, 5, 3), Error);
}

TEST(Groups, Orders) {
  EXPECT_EQ(named_group("S3").order(), 6u);
  EXPECT_EQ(named_group("S4").order(), 24u);
  EXPECT_EQ(named_group("A4").order(), 12u);
  EXPECT_EQ(named_group("A5").order(), 60u);
  EXPECT_EQ(named_group("PSL(2,7)").order(), 168u);
  EXPECT_EQ(named_group("C7").order(), 7u);
  EXPECT_TRUE(named_group("PSL(2,7)").is_associative());
}

TEST(Groups, WordImages) {
  auto c3 = named_group("C3");
  EXPECT_EQ(word_image(parse_word("x*x"), c3).size(), 3u);
  auto s3 = named_group("S3");
  auto comm = word_image(parse_word("x*y*x^-1*y^-1"), s3);
  EXPECT_EQ(comm.size(), 3u);
  EXPECT_EQ(word_image(parse_word("[x,y]"), s3), comm);
  auto a5 = named_group("A5");
  auto squares = word_image(parse_word("x^2"), a5);
  EXPECT_EQ(squares.size(), 45u);
  EXPECT_TRUE(is_conjugation_invariant(squares, a5));
  EXPECT_EQ(word_image(parse_word("x^2"), a5, {1, kDefaultBudget}), word_image(parse_word("x^2"), a5, {8, kDefaultBudget}));
}

TEST(Groups, TripleProducts) {
  auto s4 = named_group("S4");
  std::vector<std::uint32_t> all(s4.order());
  for (std::uint32_t i = 0; i < s4.order(); ++i) all[i] = i;
  EXPECT_TRUE(triple_product_covers(all, all, all, s4).covers);
  std::vector<std::uint32_t> e{s4.identity()};
  auto r = triple_product_covers(e, e, e, s4);
  EXPECT_FALSE(r.covers);
  EXPECT_EQ(r.gap.size(), 23u);
}

TEST(Groups, WordParserErrors) {
  EXPECT_THROW(parse_word("x^"), Error);
  EXPECT_THROW(parse_word("[x,y"), Error);
  EXPECT_THROW(parse_word("x+y"), Error);
  EXPECT_EQ(parse_word("[x,y]*z").arity(), 3u);
}
