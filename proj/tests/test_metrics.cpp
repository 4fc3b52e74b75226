#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "hli/error.hpp"
#include "hli/metrics.hpp"
#include "oracles.hpp"

namespace hli {
namespace {

PredictionSet make_set(std::vector<Vector> rows, std::vector<LabelSet> truth) {
  PredictionSet p{Matrix(rows.size(), rows.front().size()), std::move(truth)};
  for (std::size_t v = 0; v < rows.size(); ++v)
    for (std::size_t c = 0; c < rows[v].size(); ++c) p.scores(v, c) = rows[v][c];
  return p;
}

void expect_all_metrics_equal(const PredictionSet& a, const PredictionSet& b) {
  EXPECT_EQ(hit_at_1(a), hit_at_1(b));
  EXPECT_EQ(perr(a), perr(b));
  EXPECT_EQ(mean_average_precision(a).mean, mean_average_precision(b).mean);
  EXPECT_EQ(global_average_precision(a), global_average_precision(b));
}

TEST(MetricsTest, HitAt1Examples) {
  EXPECT_EQ(hit_at_1(make_set({{0.9, 0.1}}, {{0}})), 1.0);
  EXPECT_EQ(hit_at_1(make_set({{0.5, 0.5}}, {{1}})), 0.0);
  EXPECT_EQ(hit_at_1(make_set({{0.5, 0.5}}, {{0}})), 1.0);
  EXPECT_THROW(hit_at_1(PredictionSet{}), DataError);
}

TEST(MetricsTest, PerrExamples) {
  EXPECT_EQ(perr(make_set({{0.9, 0.8, 0.1}}, {{0, 2}})), 0.5);
  EXPECT_EQ(perr(make_set({{0.9, 0.1, 0.8}}, {{0, 2}})), 1.0);
  // Tie at the cut: label 1 outranks label 2.
  EXPECT_EQ(perr(make_set({{0.9, 0.5, 0.5}}, {{0, 2}})), 0.5);
  EXPECT_THROW(perr(make_set({{0.9, 0.1}}, {{}})), DataError);
}

TEST(MetricsTest, AveragePrecisionExamples) {
  const auto p = make_set({{0.9}, {0.8}, {0.1}}, {{0}, {}, {0}});
  const auto ap = mean_average_precision(p);
  EXPECT_DOUBLE_EQ(ap.mean, 5.0 / 6.0);
  EXPECT_EQ(ap.classes_scored, 1u);

  const auto all_pos = make_set({{0.2, 0.1}, {0.7, 0.3}, {0.4, 0.9}}, {{0}, {0}, {0}});
  const auto r = mean_average_precision(all_pos);
  EXPECT_EQ(r.per_class[0], 1.0);
  EXPECT_TRUE(std::isnan(r.per_class[1]));
  EXPECT_EQ(r.mean, 1.0);

  EXPECT_THROW(mean_average_precision(make_set({{0.5}}, {{}})), DataError);
}

TEST(MetricsTest, AveragePrecisionTieGoesToLowerVideo) {
  const auto first_pos = make_set({{0.5}, {0.5}}, {{0}, {}});
  const auto second_pos = make_set({{0.5}, {0.5}}, {{}, {0}});
  EXPECT_EQ(mean_average_precision(first_pos).mean, 1.0);
  EXPECT_EQ(mean_average_precision(second_pos).mean, 0.5);
}

TEST(MetricsTest, GlobalAveragePrecisionExamples) {
  EXPECT_EQ(global_average_precision(make_set({{0.9, 0.1, 0.8}}, {{0, 2}}), 20), 1.0);
  // Two positives below three negatives in the pool.
  const auto p = make_set({{0.9, 0.8, 0.2}, {0.7, 0.1, 0.05}}, {{2}, {1}});
  EXPECT_DOUBLE_EQ(global_average_precision(p, 3), (1.0 / 4.0 + 2.0 / 5.0) / 2.0);
  EXPECT_DOUBLE_EQ(global_average_precision(p, 3), 0.325);
  // Positives outside the top-k still count in the denominator.
  EXPECT_DOUBLE_EQ(global_average_precision(make_set({{0.9, 0.1}}, {{0, 1}}), 1), 0.5);
  EXPECT_THROW(global_average_precision(p, 0), DataError);
}

TEST(MetricsTest, TopKOrder) {
  EXPECT_EQ(top_k(Vector{0.1, 0.7, 0.7, 0.9}, 3), (std::vector<LabelIndex>{3, 1, 2}));
  EXPECT_EQ(top_k(Vector{0.1, 0.2}, 5), (std::vector<LabelIndex>{1, 0}));
}

TEST(MetricsTest, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (bool ties : {false, true}) {
    const auto p = oracle::random_predictions(rng, 200, 50, ties);
    EXPECT_EQ(hit_at_1(p), oracle::hit_at_1(p));
    EXPECT_EQ(perr(p), oracle::perr(p));
    EXPECT_NEAR(mean_average_precision(p).mean, oracle::mean_ap(p), 1e-12);
    for (std::size_t k : {1u, 3u, 20u, 60u})
      EXPECT_NEAR(global_average_precision(p, k), oracle::global_ap(p, k), 1e-12) << k;
    EXPECT_EQ(mean_average_precision(p, Exec::kSerial).per_class, mean_average_precision(p).per_class);
  }
}

TEST(MetricsTest, InvariantUnderMonotoneTransform) {
  std::mt19937_64 rng(2);
  for (bool ties : {false, true}) {
    const auto p = oracle::random_predictions(rng, 60, 12, ties);
    auto q = p;
    for (double& s : q.scores.values()) s = std::exp(3.0 * s) - 7.0;
    expect_all_metrics_equal(p, q);
  }
}

TEST(MetricsTest, InvariantUnderVideoPermutation) {
  std::mt19937_64 rng(3);
  const auto p = oracle::random_predictions(rng, 80, 10);
  std::vector<std::size_t> perm(80);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  PredictionSet q{Matrix(80, 10), {}};
  for (std::size_t v = 0; v < 80; ++v) {
    for (std::size_t c = 0; c < 10; ++c) q.scores(v, c) = p.scores(perm[v], c);
    q.truth.push_back(p.truth[perm[v]]);
  }
  EXPECT_DOUBLE_EQ(hit_at_1(p), hit_at_1(q));
  EXPECT_DOUBLE_EQ(perr(p), perr(q));
  EXPECT_NEAR(mean_average_precision(p).mean, mean_average_precision(q).mean, 1e-15);
  EXPECT_NEAR(global_average_precision(p), global_average_precision(q), 1e-15);
}

TEST(MetricsTest, PerfectPredictionsScoreOne) {
  std::mt19937_64 rng(4);
  auto p = oracle::random_predictions(rng, 40, 8);
  for (std::size_t v = 0; v < 40; ++v)
    for (std::size_t c = 0; c < 8; ++c) p.scores(v, c) = oracle::has(p.truth[v], c) ? 1.0 : 0.0;
  const auto r = evaluate(p, "entities");
  EXPECT_EQ(r.hit_at_1, 1.0);
  EXPECT_EQ(r.perr, 1.0);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.gap, 1.0);
  EXPECT_EQ(r.layer, "entities");
}

TEST(MetricsTest, ValuesStayInUnitInterval) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = oracle::random_predictions(rng, 1 + trial * 3, 2 + trial % 7, trial % 2 == 0);
    const auto r = evaluate(p, "x", 1 + trial % 5);
    for (double v : {r.map, r.perr, r.hit_at_1, r.gap}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

}  // namespace
}  // namespace hli
