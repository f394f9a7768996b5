#include <gtest/gtest.h>

#include <cmath>

#include "pfdim/dimension.hpp"
#include "pfdim/parser.hpp"

using namespace pfdim;

namespace {

Formula parse_in(const FamilyHandle& fam, const std::string& text) {
  return parse_formula_or_throw(text, fam.blocks(2).signature());
}

std::vector<std::pair<long long, double>> seq(const std::vector<double>& logs) {
  std::vector<std::pair<long long, double>> out;
  for (std::size_t i = 0; i < logs.size(); ++i) out.emplace_back(static_cast<long long>(i + 1), logs[i]);
  return out;
}

}  // namespace

TEST(Dimension, EqualSequences) {
  auto x = seq({1, 2, 3, 4});
  auto v = delta_compare(x, x);
  EXPECT_EQ(v.classification, DeltaClass::Equal);
  for (const auto& e : v.evidence) EXPECT_EQ(e.log_ratio, 0);
}

TEST(Dimension, BoundedRatioIsEqual) {
  auto y = seq({1, 2, 3, 4});
  auto x = seq({1 + std::log(2.0), 2 + std::log(2.0), 3 + std::log(2.0), 4 + std::log(2.0)});
  EXPECT_EQ(delta_compare(x, y).classification, DeltaClass::Equal);
}

TEST(Dimension, Antisymmetry) {
  const std::vector<std::vector<double>> samples = {
      {1, 2, 3, 4}, {0, 1, 3, 6}, {5, 4, 3, 2}, {0, 0, 10, 1}, {kNegInf, kNegInf, 1, 2}, {kNegInf, kNegInf, kNegInf, kNegInf}};
  for (const auto& a : samples) {
    for (const auto& b : samples) {
      const auto ab = delta_compare(seq(a), seq(b)).classification;
      const auto ba = delta_compare(seq(b), seq(a)).classification;
      EXPECT_EQ(ab, flip(ba));
    }
  }
}

TEST(Dimension, EmptySequences) {
  auto zero = seq({kNegInf, kNegInf, kNegInf, kNegInf});
  EXPECT_EQ(delta_compare(zero, zero).classification, DeltaClass::Equal);
  EXPECT_EQ(delta_compare(seq({1, 1, 1, 1}), zero).classification, DeltaClass::Greater);
  EXPECT_EQ(delta_compare(zero, seq({1, 1, 1, 1})).classification, DeltaClass::Less);
}

TEST(Dimension, TooFewSamplesUndetermined) {
  EXPECT_EQ(delta_compare(seq({10, 20, 30}), seq({0, 0, 0})).classification, DeltaClass::Undetermined);
}

TEST(Dimension, IndexMismatch) {
  auto x = seq({1, 2, 3, 4});
  auto y = x;
  y[2].first = 99;
  EXPECT_THROW(delta_compare(x, y), Error);
  y.pop_back();
  EXPECT_THROW(delta_compare(x, y), Error);
}

TEST(Dimension, StableNonAttainabilityGreater) {
  FamilyHandle fam("stablenonattainability");
  const auto f = parse_in(fam, "E(x,y)");
  const std::vector<long long> idx = {8, 16, 32, 64};
  for (int t = 1; t <= 2; ++t) {
    auto a = count_family(f, fam, idx, {{"y", "class-rank-" + std::to_string(t)}}, {"x"});
    auto b = count_family(f, fam, idx, {{"y", "class-rank-" + std::to_string(t + 1)}}, {"x"});
    const auto v = delta_compare(a, b);
    EXPECT_EQ(v.classification, DeltaClass::Greater);
    EXPECT_NEAR(v.evidence.back().log_ratio, std::log(64.0), 1e-9);
  }
}

TEST(Dimension, ConvSupersimpleChain) {
  FamilyHandle fam("convsupersimple");
  std::vector<ChainStep> steps;
  for (int i = 1; i <= 4; ++i) steps.push_back({parse_in(fam, "P" + std::to_string(i) + "(x)"), {}});
  const auto r = chain_detect(steps, fam, {8, 16, 32, 64}, {"x"});
  EXPECT_EQ(r.length, 4u);
  EXPECT_TRUE(r.monotone);
  EXPECT_FALSE(r.terminator.has_value());
  EXPECT_EQ(r.counts[3][0].value, pow(BigInt(8), 4));
}

TEST(Dimension, SingleParameterChain) {
  FamilyHandle fam("earlyexample");
  const auto f = parse_in(fam, "E(x,y)");
  const std::vector<long long> idx = {4, 8, 16, 32};
  const auto one = chain_detect({{f, {{"y", "class-2"}}}}, fam, idx, {"x"});
  EXPECT_EQ(one.length, 1u);
  // Same class twice: the conjunction is idempotent.
  const auto twice = chain_detect({{f, {{"y", "class-2"}}}, {f, {{"y", "element-1"}}}}, fam, idx, {"x"});
  EXPECT_EQ(twice.length, 1u);
  // Disjoint classes: the second prefix is empty and terminates the chain.
  const auto disjoint = chain_detect({{f, {{"y", "class-2"}}}, {f, {{"y", "class-3"}}}}, fam, idx, {"x"});
  EXPECT_EQ(disjoint.length, 1u);
  ASSERT_TRUE(disjoint.terminator.has_value());
  EXPECT_EQ(*disjoint.terminator, 1u);
  EXPECT_TRUE(disjoint.monotone);
}

TEST(Dimension, TrivialFormulaChain) {
  FamilyHandle fam("earlyexample");
  const auto f = parse_in(fam, "x = x");
  const auto r = chain_detect({{f, {}}, {f, {}}, {f, {}}}, fam, {4, 8, 16, 32}, {"x:S"});
  EXPECT_EQ(r.length, 1u);
  for (const auto& v : r.verdicts) EXPECT_EQ(v.classification, DeltaClass::Equal);
}

TEST(Dimension, FindeltaSpectrum) {
  FamilyHandle fam("findelta");
  const auto f = parse_in(fam, "E(x,y)");
  SpectrumOptions opt;
  opt.parameters = {"y"};
  const auto r = fmv_spectrum(f, fam, {4, 6, 8}, opt);
  ASSERT_EQ(r.cluster_counts.size(), 3u);
  EXPECT_EQ(r.cluster_counts[0], 4u);
  EXPECT_EQ(r.cluster_counts[1], 6u);
  EXPECT_EQ(r.cluster_counts[2], 8u);
  EXPECT_TRUE(r.unbounded);
  for (const auto& si : r.per_index) EXPECT_LE(si.clusters.size(), si.parameter_classes);
}

TEST(Dimension, EarlyExampleSpectrumGrowsAndGammaMonotone) {
  FamilyHandle fam("earlyexample");
  const auto f = parse_in(fam, "E(x,y)");
  SpectrumOptions opt;
  opt.parameters = {"y"};
  const auto r = fmv_spectrum(f, fam, {2, 4, 8}, opt);
  EXPECT_LE(r.cluster_counts[0], r.cluster_counts[2]);
  EXPECT_GT(r.cluster_counts[2], 1u);
  std::size_t previous = 1000;
  for (double gamma : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0}) {
    DimensionThresholds th;
    th.gamma = gamma;
    const auto g = fmv_spectrum(f, fam, {8}, opt, th);
    EXPECT_LE(g.cluster_counts[0], previous);
    previous = g.cluster_counts[0];
  }
}

TEST(Dimension, DummyParameterSingleCluster) {
  FamilyHandle fam("earlyexample");
  const auto f = parse_in(fam, "x = x");
  SpectrumOptions opt;
  opt.parameters = {"y"};
  const auto r = fmv_spectrum(f, fam, {2, 4, 8}, opt);
  for (auto c : r.cluster_counts) EXPECT_EQ(c, 1u);
  EXPECT_FALSE(r.unbounded);
}

TEST(Dimension, SelectorSetSpectrum) {
  FamilyHandle fam("rank2classes");
  const auto f = parse_in(fam, "E(x,y)");
  SpectrumOptions opt;
  opt.parameters = {"y"};
  opt.selector_set = {{{"y", "big-class"}}, {{"y", "small-class"}}};
  const auto r = fmv_spectrum(f, fam, {4, 8}, opt);
  EXPECT_EQ(r.per_index[0].counts.size(), 2u);
  EXPECT_EQ(r.per_index[0].counts[0], 4);
  EXPECT_EQ(r.per_index[0].counts[1], 16);
}

TEST(Dimension, JsonAndCsv) {
  FamilyHandle fam("earlyexample");
  const auto f = parse_in(fam, "E(x,y)");
  auto s = count_family(f, fam, {1, 2}, {{"y", "class-1"}}, {"x"});
  const auto csv = to_csv({s});
  EXPECT_NE(csv.find("label,index,count,log_count"), std::string::npos);
  EXPECT_NE(csv.find(",2,1,0"), std::string::npos);
  const auto j = to_json(delta_compare(s, s));
  EXPECT_EQ(j["classification"], "undetermined");
  EXPECT_EQ(j["evidence"].size(), 2u);
}
