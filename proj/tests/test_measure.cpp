#include <gtest/gtest.h>

#include <random>

#include "pfdim/measure.hpp"
#include "pfdim/parser.hpp"

using namespace pfdim;

namespace {

FiniteMeasureSpace random_space(std::mt19937_64& rng, std::size_t atoms) {
  std::uniform_int_distribution<int> w(1, 12);
  std::vector<long long> raw;
  long long total = 0;
  for (std::size_t a = 0; a < atoms; ++a) {
    raw.push_back(w(rng));
    total += raw.back();
  }
  std::vector<Rational> weights;
  for (auto r : raw) weights.push_back(Rational(r, total));
  return FiniteMeasureSpace(weights);
}

// Random event of measure at least eps, grown one random atom at a time.
Event random_event(std::mt19937_64& rng, const FiniteMeasureSpace& s, const Rational& eps) {
  std::vector<std::size_t> order(s.atoms());
  for (std::size_t a = 0; a < order.size(); ++a) order[a] = a;
  std::shuffle(order.begin(), order.end(), rng);
  Event e(s.atoms());
  std::size_t i = 0;
  while (s.measure(e) < eps) e.insert(order[i++]);
  std::bernoulli_distribution extra(0.3);
  for (; i < order.size(); ++i) {
    if (extra(rng)) e.insert(order[i]);
  }
  return e;
}

}  // namespace

TEST(Measure, BasicMeasures) {
  auto s = FiniteMeasureSpace::uniform(10);
  EXPECT_EQ(mu(s, Event::full(10)), 1);
  EXPECT_EQ(mu(s, Event(10)), 0);
  EXPECT_EQ(mu(s, std::vector<std::size_t>{1, 4, 7}), Rational(3, 10));
  EXPECT_THROW(mu(s, std::vector<std::size_t>{10}), Error);
}

TEST(Measure, Additivity) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    auto s = random_space(rng, 1 + rng() % 20);
    Event a(s.atoms()), b(s.atoms());
    for (std::size_t i = 0; i < s.atoms(); ++i) {
      const auto r = rng() % 3;
      if (r == 0) a.insert(i);
      if (r == 1) b.insert(i);
    }
    EXPECT_EQ(mu(s, a | b), mu(s, a) + mu(s, b));
  }
}

TEST(Measure, InvalidSpaces) {
  EXPECT_THROW(FiniteMeasureSpace({Rational(1, 2), Rational(1, 3)}), Error);
  EXPECT_THROW(FiniteMeasureSpace({Rational(3, 2), Rational(-1, 2)}), Error);
  EXPECT_THROW(FiniteMeasureSpace(std::vector<Rational>{}), Error);
}

TEST(Measure, JsonRoundTrip) {
  auto doc = nlohmann::json::parse(R"({"weights":["1/4","1/4","1/2"],"events":[[0,1],[2]]})");
  auto in = measure_from_json(doc);
  EXPECT_EQ(mu(in.space, in.events[0]), Rational(1, 2));
  EXPECT_EQ(measure_to_json(in.space, in.events), doc);
  EXPECT_THROW(measure_from_json(nlohmann::json::parse(R"({"weights":["1/2"]})")), Error);
  EXPECT_THROW(measure_from_json(nlohmann::json::parse(R"({"weights":["1"],"events":[[3]]})")), Error);
  EXPECT_THROW(measure_from_json(nlohmann::json::parse(R"({"events":[]})")), Error);
}

TEST(Measure, MuDSequence) {
  FamilyHandle fam("rank2classes");
  const BlockStructure blocks = fam.blocks(2);
  const auto& sig = blocks.signature();
  const auto d = parse_formula_or_throw("x = x", sig);
  const auto big = parse_formula_or_throw("E(x,y)", sig);
  for (const auto& [index, ratio] : mu_D_sequence(fam, d, big, {2, 4, 8, 100}, {"x"}, {{"y", "big-class"}})) {
    EXPECT_EQ(ratio, Rational(1, 2)) << index;
  }
  for (const auto& [index, ratio] : mu_D_sequence(fam, d, d, {2, 4}, {"x"})) EXPECT_EQ(ratio, 1);
  const auto none = parse_formula_or_throw("!(x = x)", sig);
  for (const auto& [index, ratio] : mu_D_sequence(fam, d, none, {2, 4}, {"x"})) EXPECT_EQ(ratio, 0);
  EXPECT_THROW(mu_D_sequence(fam, none, d, {2}, {"x"}), Error);
  // Additivity over the disjoint pieces "big class" and "not the big class".
  const auto rest = parse_formula_or_throw("!E(x,y)", sig);
  const auto a = mu_D_sequence(fam, d, big, {3, 5}, {"x"}, {{"y", "big-class"}});
  const auto b = mu_D_sequence(fam, d, rest, {3, 5}, {"x"}, {{"y", "big-class"}});
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].second + b[i].second, 1);
}

TEST(Measure, Binomials) {
  EXPECT_EQ(binomial(BigInt(5), 2), 10);
  EXPECT_EQ(binomial(BigInt(2), 3), 0);
  EXPECT_EQ(convex_binomial(Rational(5, 2), 2), Rational(1) + Rational(1, 2) * 2);
  EXPECT_EQ(k_intersection_bound(Rational(1, 2), 3), Rational(1, 512));
  EXPECT_EQ(pairwise_threshold(Rational(1, 2)), 4u);
  EXPECT_EQ(pairwise_threshold(Rational(1, 3)), 9u);
  EXPECT_EQ(pairwise_threshold(Rational(1, 4)), 16u);
}

TEST(Measure, KOneAndHalfSpace) {
  auto s = FiniteMeasureSpace::uniform(8);
  std::vector<Event> half(4, s.event({0, 1, 2, 3}));
  auto r1 = find_k_intersection(s, half, 1);
  EXPECT_EQ(r1.status, KIntersectionStatus::Found);
  EXPECT_EQ(r1.bound, Rational(1, 2));
  auto r2 = find_k_intersection(s, half, 2);
  ASSERT_EQ(r2.status, KIntersectionStatus::Found);
  EXPECT_EQ(r2.measure, Rational(1, 2));
  EXPECT_GE(r2.measure, Rational(1, 8));
}

TEST(Measure, KThreeOnSixteenAtoms) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    auto s = random_space(rng, 16);
    std::vector<Event> ev;
    for (int i = 0; i < 12; ++i) ev.push_back(random_event(rng, s, Rational(1, 3)));
    auto r = find_k_intersection(s, ev, 3, Rational(1, 3));
    ASSERT_EQ(r.status, KIntersectionStatus::Found);
    EXPECT_EQ(r.strategy, "exhaustive");
    EXPECT_GE(r.measure, pow(Rational(1, 3), 9));
    EXPECT_EQ(r.indices.size(), 3u);
    EXPECT_EQ(mu(s, detail::intersect(s, ev, r.indices)), r.measure);
  }
}

TEST(Measure, RecursiveAndFallbackPaths) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 40; ++t) {
    auto s = random_space(rng, 20);
    const Rational eps(1, 2 + static_cast<long long>(rng() % 3));
    const unsigned k = 2 + static_cast<unsigned>(rng() % 3);
    const std::size_t n = std::max<std::size_t>(*minimal_certified_events(k, eps), 30);
    std::vector<Event> ev;
    for (std::size_t i = 0; i < n; ++i) ev.push_back(random_event(rng, s, eps));
    KIntersectionOptions opt;
    opt.force_recursive = true;
    auto r = find_k_intersection(s, ev, k, eps, opt);
    ASSERT_EQ(r.status, KIntersectionStatus::Found);
    EXPECT_GE(r.measure, k_intersection_bound(eps, k));
    EXPECT_TRUE(std::is_sorted(r.indices.begin(), r.indices.end()));
    const auto ce = detail::conditional_expectation_search(s, ev, k);
    EXPECT_GE(mu(s, detail::intersect(s, ev, ce)), k_intersection_bound(eps, k));
  }
}

TEST(Measure, HypothesisErrors) {
  auto s = FiniteMeasureSpace::uniform(4);
  std::vector<Event> ev = {s.event({0}), s.event({0, 1}), s.event({1, 2})};
  try {
    find_k_intersection(s, ev, 2, Rational(1, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HypothesisViolation);
  }
  std::vector<Event> big = {s.event({0, 1, 2}), s.event({1, 2, 3})};
  try {
    find_k_intersection(s, big, 2, Rational(3, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::HypothesisViolation);
  }
  try {
    find_k_intersection(s, {s.event({0, 1})}, 2, Rational(1, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TooFewEvents);
  }
}

TEST(Measure, PairwiseThreshold) {
  auto s = FiniteMeasureSpace::uniform(12);
  std::vector<Event> same(4, s.event({0, 1, 2, 3, 4, 5}));
  auto r = pairwise_threshold_check(s, same, Rational(1, 2));
  EXPECT_TRUE(r.ok);
  EXPECT_EQ(r.measure, Rational(1, 2));
  EXPECT_TRUE(r.dagger.holds);
  EXPECT_THROW(pairwise_threshold_check(s, {same[0], same[1], same[2]}, Rational(1, 2)), Error);
}

// Every family of 4 events of measure >= 1/2 on small uniform spaces.
TEST(Measure, PairwiseExhaustiveSmallSpaces) {
  for (std::size_t atoms = 2; atoms <= 6; ++atoms) {
    auto s = FiniteMeasureSpace::uniform(atoms);
    std::vector<Event> candidates;
    for (std::uint32_t mask = 0; mask < (1u << atoms); ++mask) {
      Event e(atoms);
      for (std::size_t a = 0; a < atoms; ++a) {
        if (mask >> a & 1) e.insert(a);
      }
      if (mu(s, e) >= Rational(1, 2)) candidates.push_back(e);
    }
    const std::size_t c = candidates.size();
    for (std::size_t a = 0; a < c; ++a) {
      for (std::size_t b = a; b < c; ++b) {
        for (std::size_t d = b; d < c; ++d) {
          for (std::size_t e = d; e < c; ++e) {
            auto r = pairwise_threshold_check(s, {candidates[a], candidates[b], candidates[d], candidates[e]}, Rational(1, 2));
            ASSERT_TRUE(r.ok);
            ASSERT_TRUE(r.dagger.holds);
          }
        }
      }
    }
  }
}
