#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "deris/annotations.hpp"
#include "deris/metrics.hpp"
#include "deris/verify.hpp"

using namespace deris;

namespace {

/// 1 x 16 strip with cells [begin, end) on.
BinaryMask strip(std::size_t begin, std::size_t end) {
  BinaryMask m(1, 16);
  for (std::size_t j = begin; j < end; ++j) m.bits[j] = 1;
  return m;
}

std::vector<SampleEval> five_sample_fixture() {
  return {sample_iou(strip(0, 1), strip(0, 2)), sample_iou(strip(0, 9), strip(0, 10)),
          sample_iou(strip(0, 0), strip(0, 0)), sample_iou(strip(5, 8), strip(0, 0)),
          sample_iou(strip(3, 7), strip(3, 7))};
}

SampleEval random_eval(Rng& rng) {
  BinaryMask p(4, 4), g(4, 4);
  const double dp = rng.uniform(), dg = rng.bernoulli(0.2) ? 0.0 : rng.uniform();
  for (auto& b : p.bits) b = rng.bernoulli(dp);
  for (auto& b : g.bits) b = rng.bernoulli(dg);
  return sample_iou(p, g);
}

}  // namespace

TEST(SampleIou, InvariantTable) {
  EXPECT_EQ(sample_iou(strip(0, 4), strip(0, 4)).iou, 1.0);
  EXPECT_EQ(sample_iou(strip(0, 0), strip(0, 0)).iou, 1.0);
  EXPECT_EQ(sample_iou(strip(0, 2), strip(0, 0)).iou, 0.0);
  EXPECT_EQ(sample_iou(strip(0, 0), strip(0, 2)).iou, 0.0);
  const SampleEval half = sample_iou(strip(0, 2), strip(0, 4));
  EXPECT_EQ(half.intersection, 2u);
  EXPECT_EQ(half.union_, 4u);
  EXPECT_EQ(half.iou, 0.5);
  EXPECT_THROW(sample_iou(BinaryMask(2, 2), BinaryMask(2, 3)), DimensionError);
}

TEST(Metrics, FiveSampleOracle) {
  // Tallies (I, U, iou): (1,2,1/2) (9,10,9/10) (0,0,1) (0,3,0) (4,4,1).
  const auto evals = five_sample_fixture();
  const std::uint64_t inter = 1 + 9 + 0 + 0 + 4, uni = 2 + 10 + 0 + 3 + 4;
  EXPECT_NEAR(giou(evals), (0.5 + 0.9 + 1.0 + 0.0 + 1.0) / 5.0, 1e-12);
  EXPECT_NEAR(ciou(evals), static_cast<double>(inter) / static_cast<double>(uni), 1e-12);
  EXPECT_NEAR(*n_acc(evals), 1.0 / 2.0, 1e-12);
  EXPECT_NEAR(*pr_at(evals, 0.9), 1.0 / 3.0, 1e-12);  // 0.9 itself is not above 0.9
  EXPECT_NEAR(*miou(evals), (0.5 + 0.9 + 1.0) / 3.0, 1e-12);
  EXPECT_TRUE(check_metric_oracles().passed());
}

TEST(Metrics, CiouAndGiouDiverge) {
  const std::vector<SampleEval> pair = {eval_from_tallies(1, 2, false, false),
                                        eval_from_tallies(9, 10, false, false)};
  EXPECT_NEAR(ciou(pair), 10.0 / 12.0, 1e-15);
  EXPECT_NEAR(giou(pair), 0.7, 1e-15);
}

TEST(Metrics, DomainEdges) {
  EXPECT_THROW(giou({}), std::invalid_argument);
  EXPECT_EQ(ciou({}), 1.0);
  const std::vector<SampleEval> empties = {sample_iou(strip(0, 0), strip(0, 0))};
  EXPECT_EQ(giou(empties), 1.0);
  EXPECT_EQ(ciou(empties), 1.0);
  EXPECT_FALSE(pr_at(empties, 0.5).has_value());
  const std::vector<SampleEval> referent_only = {sample_iou(strip(0, 3), strip(0, 3))};
  EXPECT_FALSE(n_acc(referent_only).has_value());
  EXPECT_THROW(pr_at(referent_only, 1.0), std::invalid_argument);
}

TEST(Metrics, NAccCountsEmptyPredictions) {
  const std::vector<SampleEval> evals = {sample_iou(strip(0, 0), strip(0, 0)),
                                         sample_iou(strip(0, 0), strip(0, 0)),
                                         sample_iou(strip(0, 1), strip(0, 0)),
                                         sample_iou(strip(0, 3), strip(0, 3))};
  EXPECT_NEAR(*n_acc(evals), 2.0 / 3.0, 1e-15);
}

TEST(Metrics, PrAtHandCount) {
  const std::vector<SampleEval> evals = {eval_from_tallies(19, 20, false, false),
                                         eval_from_tallies(1, 2, false, false)};
  EXPECT_EQ(*pr_at(evals, 0.9), 0.5);
}

TEST(Metrics, OrderInvariance) {
  Rng root(50);
  for (std::size_t trial = 0; trial < 100; ++trial) {
    Rng rng = root.child(trial);
    std::vector<SampleEval> evals(1 + rng.below(30));
    for (auto& e : evals) e = random_eval(rng);
    const MetricsReport a = evaluate(evals);
    std::vector<std::size_t> order(evals.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    std::vector<SampleEval> shuffled;
    for (auto i : order) shuffled.push_back(evals[i]);
    const MetricsReport b = evaluate(shuffled);
    ASSERT_EQ(a.ciou, b.ciou);
    ASSERT_EQ(a.total_intersection, b.total_intersection);
    ASSERT_EQ(a.n_acc, b.n_acc);
    ASSERT_EQ(a.pr_at, b.pr_at);
    ASSERT_NEAR(a.giou, b.giou, 1e-15);
  }
}

TEST(Metrics, PerfectPredictionsDominate) {
  Rng root(51);
  for (std::size_t trial = 0; trial < 50; ++trial) {
    Rng rng = root.child(trial);
    std::vector<SampleEval> evals;
    for (std::size_t i = 0; i < 10; ++i) {
      BinaryMask g(4, 4);
      for (auto& b : g.bits) b = rng.bernoulli(0.4);
      evals.push_back(sample_iou(g, g));
    }
    const MetricsReport r = evaluate(evals);
    EXPECT_EQ(r.giou, 1.0);
    EXPECT_EQ(r.ciou, 1.0);
    for (const auto& [t, v] : r.pr_at) {
      if (v) EXPECT_EQ(*v, 1.0);
    }
  }
}

TEST(Metrics, SharedTallyMakesCiouEqualGiou) {
  const std::vector<SampleEval> evals(7, eval_from_tallies(3, 8, false, false));
  EXPECT_EQ(ciou(evals), giou(evals));
}

TEST(Metrics, MiouEqualsGiouWithoutNonReferents) {
  Rng rng(52);
  std::vector<SampleEval> evals;
  while (evals.size() < 20) {
    const SampleEval e = random_eval(rng);
    if (!e.gt_empty) evals.push_back(e);
  }
  EXPECT_EQ(*miou(evals), giou(evals));
}

TEST(Predictions, FileRoundTripAndScoring) {
  const auto path = std::filesystem::temp_directory_path() / "deris_metrics_preds.jsonl";
  Sample a;
  a.image_id = 0;
  a.sentence = "a";
  a.gt_masks = {strip(0, 4)};
  a.is_nonreferent = false;
  Sample b;
  b.image_id = 1;
  b.sentence = "b";
  const std::vector<PredictionRecord> recs = {{1, 1, strip(0, 0)}, {0, 0, strip(0, 2)}};
  write_predictions(path, recs);
  const auto back = read_predictions(path, 1, 16);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].mask, strip(0, 2));
  EXPECT_TRUE(back[0].mask.empty());
  const auto evals = score_predictions(back, {a, b}, 1, 16);
  EXPECT_EQ(evals[0].iou, 0.5);
  EXPECT_EQ(evals[1].iou, 1.0);
  std::filesystem::remove(path);

  EXPECT_THROW(score_predictions({recs[0]}, {a, b}, 1, 16), FormatError);
  EXPECT_THROW(score_predictions({recs[0], recs[0], recs[1]}, {a, b}, 1, 16), FormatError);
  EXPECT_THROW(score_predictions({{5, 0, strip(0, 0)}, recs[0]}, {a, b}, 1, 16), FormatError);
}
