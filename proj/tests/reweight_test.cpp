#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "streamlp/reweight.hpp"
#include "support.hpp"

namespace streamlp {
namespace {

std::vector<Embedding> anchors(const std::vector<std::vector<double>>& rows, NodeKind kind) {
  std::vector<Embedding> out;
  for (std::size_t i = 0; i < rows.size(); ++i) out.emplace_back(rows[i], kind, i);
  return out;
}

// Scalar mean / population variance, written independently of the library.
std::vector<double> scalar_variance(const std::vector<std::vector<double>>& rows) {
  const std::size_t d = rows[0].size();
  std::vector<double> var(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r[c];
    mean /= rows.size();
    for (const auto& r : rows) var[c] += (r[c] - mean) * (r[c] - mean);
    var[c] /= rows.size();
  }
  return var;
}

TEST(PrototypeStats, TwoAxes) {
  const auto stats = compute_prototype_stats(anchors({{1, 0}, {0, 1}}, NodeKind::Prototype));
  EXPECT_DOUBLE_EQ(stats.mu_p[0], 0.5);
  EXPECT_DOUBLE_EQ(stats.mu_p[1], 0.5);
  EXPECT_DOUBLE_EQ(stats.var_p[0], 0.25);
  EXPECT_DOUBLE_EQ(stats.var_p[1], 0.25);
  EXPECT_FALSE(stats.var_l.has_value());
}

TEST(PrototypeStats, RepeatedAxes) {
  const auto stats =
      compute_prototype_stats(anchors({{1, 0}, {1, 0}, {0, 1}, {0, 1}}, NodeKind::Prototype));
  EXPECT_DOUBLE_EQ(stats.var_p[0], 0.25);
  EXPECT_DOUBLE_EQ(stats.var_p[1], 0.25);
}

TEST(PrototypeStats, IdenticalPrototypesHaveZeroVariance) {
  const auto stats = compute_prototype_stats(anchors({{1, 2}, {1, 2}, {1, 2}}, NodeKind::Prototype));
  EXPECT_EQ(stats.var_p, (std::vector<double>{0.0, 0.0}));
}

TEST(PrototypeStats, MatchesScalarOracle) {
  std::mt19937_64 rng(5);
  const auto protos = testing::random_embeddings(rng, 7, 13, NodeKind::Prototype);
  std::vector<std::vector<double>> rows;
  for (const auto& p : protos) rows.emplace_back(p.values().begin(), p.values().end());
  const auto expected = scalar_variance(rows);
  const auto stats = compute_prototype_stats(protos);
  for (std::size_t c = 0; c < expected.size(); ++c) EXPECT_NEAR(stats.var_p[c], expected[c], 1e-15);
}

TEST(PrototypeStats, NeedsTwoPrototypes) {
  EXPECT_THROW(compute_prototype_stats(anchors({{1, 0}}, NodeKind::Prototype)), StatsDegenerate);
}

TEST(FewShotStats, TwoAxes) {
  std::vector<Embedding> shots{Embedding(std::vector<double>{1, 0}, NodeKind::FewShot, 0),
                               Embedding(std::vector<double>{0, 1}, NodeKind::FewShot, 1)};
  const auto stats = compute_fewshot_stats(shots);
  ASSERT_TRUE(stats.var_l.has_value());
  EXPECT_DOUBLE_EQ((*stats.var_l)[0], 0.25);
  EXPECT_DOUBLE_EQ((*stats.var_l)[1], 0.25);
}

TEST(FewShotStats, EmptyIsAbsentAndSingleIsDegenerate) {
  EXPECT_FALSE(compute_fewshot_stats({}).var_l.has_value());
  std::vector<Embedding> one{Embedding(std::vector<double>{1, 0}, NodeKind::FewShot, 0)};
  EXPECT_THROW(compute_fewshot_stats(one), StatsDegenerate);
}

TEST(FewShotStats, IdenticalSamplesHaveZeroVariance) {
  std::vector<Embedding> shots{Embedding(std::vector<double>{1, 1}, NodeKind::FewShot, 0),
                               Embedding(std::vector<double>{1, 1}, NodeKind::FewShot, 1)};
  EXPECT_EQ(*compute_fewshot_stats(shots).var_l, (std::vector<double>{0.0, 0.0}));
}

TEST(TextReweight, UnitWeightsGiveCosine) {
  const std::vector<double> q{0.6, 0.8}, t{1.0, 0.0}, ones{1.0, 1.0};
  EXPECT_NEAR(text_reweighted_similarity(q, t, ones), 0.6, 1e-15);
}

TEST(TextReweight, MaskedDimension) {
  const std::vector<double> q{1.0, 0.0}, t{0.6, 0.8}, var{0.0, 1.0};
  EXPECT_EQ(text_reweighted_similarity(q, t, var), 0.0);
}

TEST(TextReweight, ZeroWeightsGiveZero) {
  const std::vector<double> q{1.0, 0.0}, t{0.6, 0.8}, var{0.0, 0.0};
  EXPECT_EQ(text_reweighted_similarity(q, t, var), 0.0);
}

TEST(FewShotReweight, UnitWeightsGiveCosine) {
  const std::vector<double> l{0.6, 0.8}, u{1.0, 0.0}, ones{1.0, 1.0};
  EXPECT_NEAR(fewshot_reweighted_similarity(l, u, ones), 0.6, 1e-7);
}

TEST(FewShotReweight, CrushedDimension) {
  const std::vector<double> l{1.0, 0.0}, u{0.6, 0.8}, var{1e9, 1e-9};
  EXPECT_NEAR(fewshot_reweighted_similarity(l, u, var), 0.0, 1e-12);
}

TEST(FewShotReweight, ZeroVarianceGivesCosine) {
  const std::vector<double> l{0.6, 0.8}, u{1.0, 0.0}, zero{0.0, 0.0};
  EXPECT_NEAR(fewshot_reweighted_similarity(l, u, zero), 0.6, 1e-15);
}

TEST(Reweight, ScaleInvarianceBoundAndCosineReduction) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t d = 2 + trial % 40;
    const Embedding q(testing::random_vector(rng, d), NodeKind::Test);
    const Embedding t(testing::random_vector(rng, d), NodeKind::Test);
    std::vector<double> var(d);
    for (double& v : var) v = unit(rng);
    const double base = text_reweighted_similarity(q, t, var);
    for (double kappa : {1e-6, 0.3, 7.0, 1e6}) {
      std::vector<double> scaled(var);
      for (double& v : scaled) v *= kappa;
      EXPECT_NEAR(text_reweighted_similarity(q, t, scaled), base, 1e-12);
    }
    EXPECT_LE(std::abs(base), 1.0);
    EXPECT_LE(std::abs(fewshot_reweighted_similarity(q, t, var)), 1.0);

    double cosine = 0.0;
    for (std::size_t c = 0; c < d; ++c) cosine += q.values()[c] * t.values()[c];
    const std::vector<double> constant(d, 0.5 + unit(rng));
    EXPECT_NEAR(text_reweighted_similarity(q, t, constant), cosine, 1e-9);
    EXPECT_NEAR(fewshot_reweighted_similarity(q, t, constant), cosine, 1e-9);
  }
}

TEST(Reweight, ParallelVectorsClampToOne) {
  const std::vector<double> q{1.0 / 3, 2.0 / 3, 2.0 / 3};
  const std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_LE(text_reweighted_similarity(q, q, ones), 1.0);
  EXPECT_EQ(clamp_similarity(1.0 + 1e-15), 1.0);
  EXPECT_EQ(clamp_similarity(-1.0 - 1e-15), -1.0);
}

}  // namespace
}  // namespace streamlp
