#include <gtest/gtest.h>

#include <cmath>

#include "deris/losses.hpp"
#include "deris/verify.hpp"

using namespace deris;

namespace {

Tensor random_logits(Rng& rng, Shape shape, double bound = 3.0) {
  Tensor t(std::move(shape));
  for (double& v : t.values()) v = rng.uniform(-bound, bound);
  return t;
}

BinaryMask coin_mask(Rng& rng, std::size_t h, std::size_t w) {
  BinaryMask m(h, w);
  for (auto& b : m.bits) b = rng.bernoulli(0.5) ? 1 : 0;
  if (m.empty()) m.bits[0] = 1;
  return m;
}

long double naive_bce(long double z, long double g) {
  const long double p = 1.0L / (1.0L + std::exp(-z));
  return -(g * std::log(p) + (1.0L - g) * std::log(1.0L - p));
}

}  // namespace

TEST(Bce, MatchesNaiveFormula) {
  Rng rng(1);
  const Tensor z = random_logits(rng, {4, 4});
  Tensor g({4, 4});
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (i % 3 == 0) ? 1.0 : 0.0;
  long double want = 0.0L;
  for (std::size_t i = 0; i < z.size(); ++i) want += naive_bce(z[i], g[i]);
  want /= 16.0L;
  const LossGrad r = bce_with_logits(z, g);
  EXPECT_NEAR(r.loss, static_cast<double>(want), 1e-15);
  for (std::size_t i = 0; i < z.size(); ++i) {
    EXPECT_NEAR(r.grad[i], (1.0 / (1.0 + std::exp(-z[i])) - g[i]) / 16.0, 1e-17);
  }
}

TEST(Bce, ZeroLogitCostsLogTwo) {
  EXPECT_DOUBLE_EQ(bce_with_logits(Tensor({1}, 0.0), Tensor({1}, 1.0)).loss, std::log(2.0));
}

TEST(Bce, StableForHugeLogits) {
  const LossGrad r = bce_with_logits(Tensor({2}, {800.0, -800.0}), Tensor({2}, {0.0, 1.0}));
  EXPECT_DOUBLE_EQ(r.loss, 800.0);
  EXPECT_TRUE(r.grad.all_finite());
}

TEST(Bce, RejectsSoftTargetsAndShapeMismatch) {
  EXPECT_THROW(bce_with_logits(Tensor({1}), Tensor({1}, 0.5)), std::domain_error);
  EXPECT_THROW(bce_with_logits(Tensor({2}), Tensor({3})), DimensionError);
}

TEST(Dice, HandValue) {
  // p = 0.5 on four pixels, all GT: (2 * 2 + 1) / (2 + 4 + 1) = 5/7.
  const LossGrad r = dice_loss(Tensor({2, 2}, 0.0), Tensor({2, 2}, 1.0));
  EXPECT_NEAR(r.loss, 2.0 / 7.0, 1e-16);
}

TEST(Dice, PerfectPredictionApproachesZero) {
  Tensor z({4, 4}, -40.0), g({4, 4}, 0.0);
  for (std::size_t i = 0; i < 8; ++i) {
    z[i] = 40.0;
    g[i] = 1.0;
  }
  EXPECT_NEAR(dice_loss(z, g).loss, 0.0, 1e-15);
  EXPECT_NEAR(dice_loss(Tensor({4}, -40.0), Tensor({4}, 0.0)).loss, 0.0, 1e-15);
}

TEST(Gradients, FiniteDifferencesOnCoinFlipMasks) {
  const GradientCheck check = check_gradients(31, 100);
  EXPECT_EQ(check.cases, 100u);
  EXPECT_LT(check.max_rel_error_bce, 1e-5);
  EXPECT_LT(check.max_rel_error_dice, 1e-5);
}

TEST(Gradients, SmallObjectsHitTheRoundoffFloor) {
  // A one-pixel target leaves background Dice gradients near 1e-6, where the
  // O(1) loss value limits central differences to about 1e-5 relative error.
  Rng rng(32);
  const Tensor z = random_logits(rng, {16, 16});
  Tensor g({16, 16}, 0.0);
  g.at(5, 5) = 1.0;
  const double err =
      finite_diff_check([&](const Tensor& x) { return dice_loss(x, g); }, z, kFiniteDiffStep);
  EXPECT_LT(err, 1e-4);
}

TEST(Gradients, CheckerCatchesAWrongGradient) {
  EXPECT_FALSE(check_gradients(33, 5, 16, kFiniteDiffStep, Fault::dice_grad)
                   .passed(kGradientTolerance));
  const double err = finite_diff_check(
      [](const Tensor& x) {
        LossGrad r = bce_with_logits(x, Tensor(x.shape(), 1.0));
        r.grad[0] *= 2.0;
        return r;
      },
      Tensor({3}, 0.2), 1e-6);
  EXPECT_GT(err, 0.4);
}

TEST(Gradients, StepMustBeInRange) {
  const auto fn = [](const Tensor& x) { return bce_with_logits(x, Tensor(x.shape(), 0.0)); };
  EXPECT_THROW(finite_diff_check(fn, Tensor({1}), 1e-3), std::invalid_argument);
  EXPECT_THROW(finite_diff_check(fn, Tensor({1}), 1e-9), std::invalid_argument);
}

TEST(RoundLoss, NoGroundTruthTrainsOnlyScores) {
  Rng rng(2);
  const Tensor m_p = random_logits(rng, {3, 4, 4}), s_r = random_logits(rng, {3});
  const MatchResult match = hungarian(match_cost(m_p, s_r, {}));
  const RoundLossGrad r = round_loss_terms(m_p, s_r, {}, match, LossWeights{}, 0.3, false);
  EXPECT_EQ(r.terms.l_mask, 0.0);
  for (double v : r.grad_m_p.values()) EXPECT_EQ(v, 0.0);
  EXPECT_DOUBLE_EQ(r.terms.l_r, bce_with_logits(s_r, Tensor({3}, 0.0)).loss);
  EXPECT_DOUBLE_EQ(r.terms.l_nr, std::log1p(std::exp(0.3)));
  EXPECT_DOUBLE_EQ(r.grad_nonref, 1.0 / (1.0 + std::exp(-0.3)));
  EXPECT_DOUBLE_EQ(r.terms.total, r.terms.l_r + r.terms.l_nr);
}

TEST(RoundLoss, NonReferentTermOnlyWithLogit) {
  Rng rng(3);
  const Tensor m_p = random_logits(rng, {2, 4, 4}), s_r = random_logits(rng, {2});
  const std::vector<BinaryMask> gt = {coin_mask(rng, 4, 4)};
  const MatchResult match = hungarian(match_cost(m_p, s_r, gt));
  const auto without = round_loss_terms(m_p, s_r, gt, match, LossWeights{}, std::nullopt, true);
  EXPECT_EQ(without.terms.l_nr, 0.0);
  EXPECT_EQ(without.grad_nonref, 0.0);
  const auto with = round_loss_terms(m_p, s_r, gt, match, LossWeights{}, 1.0, true);
  EXPECT_DOUBLE_EQ(with.terms.total - without.terms.total, with.terms.l_nr);
}

TEST(RoundLoss, GradientsMatchFiniteDifferences) {
  Rng rng(4);
  const Tensor m_p = random_logits(rng, {4, 6, 6}), s_r = random_logits(rng, {4});
  const std::vector<BinaryMask> gt = {coin_mask(rng, 6, 6), coin_mask(rng, 6, 6)};
  const MatchResult match = hungarian(match_cost(m_p, s_r, gt));
  LossWeights w;
  w.mask = 1.5;
  w.referent = 0.75;

  const auto wrt_masks = [&](const Tensor& x) {
    const auto r = round_loss_terms(x, s_r, gt, match, w, 0.2, true);
    return LossGrad{r.terms.total, r.grad_m_p};
  };
  EXPECT_LT(finite_diff_check(wrt_masks, m_p, 1e-6), 1e-6);
  const auto wrt_scores = [&](const Tensor& x) {
    const auto r = round_loss_terms(m_p, x, gt, match, w, 0.2, true);
    return LossGrad{r.terms.total, r.grad_s_r};
  };
  EXPECT_LT(finite_diff_check(wrt_scores, s_r, 1e-6), 1e-6);
}

TEST(RoundLoss, MaskTermAveragesMatchedPairs) {
  Rng rng(5);
  const Tensor m_p = random_logits(rng, {3, 4, 4}), s_r = random_logits(rng, {3});
  const std::vector<BinaryMask> gt = {coin_mask(rng, 4, 4), coin_mask(rng, 4, 4)};
  const MatchResult match = hungarian(match_cost(m_p, s_r, gt));
  double want = 0.0;
  for (const auto& p : match.pairs) {
    const Tensor z({4, 4}, std::vector<double>(m_p.slice(p.query).begin(), m_p.slice(p.query).end()));
    const Tensor g = mask_to_tensor(gt[p.gt]);
    want += bce_with_logits(z, g).loss + dice_loss(z, g).loss;
  }
  const auto r = round_loss_terms(m_p, s_r, gt, match, LossWeights{}, std::nullopt, true);
  EXPECT_NEAR(r.terms.l_mask, want / 2.0, 1e-15);
}

TEST(TotalLoss, AuxiliaryWeighting) {
  EXPECT_EQ(total_loss({1.0, 1.0, 1.0}, 0.2), 1.4);
  EXPECT_EQ(total_loss({1.0, 1.0, 1.0}, 0.2), 0.2 * 2.0 + 1.0);
  EXPECT_EQ(total_loss({0.7}, 0.2), 0.7);
  EXPECT_EQ(total_loss({2.0, 4.0, 0.5}, 0.0), 0.5);
  EXPECT_THROW(total_loss({}, 0.2), std::invalid_argument);
}

TEST(TotalLoss, StructureCheckPasses) { EXPECT_TRUE(check_total_loss_structure().passed()); }

TEST(Descent, FreeLogitsReachTheTarget) {
  const DescentResult r = run_descent(12);
  EXPECT_TRUE(r.reached);
  EXPECT_LE(r.steps, 500u);
  EXPECT_GT(r.final_iou, 0.99);
  EXPECT_LT(r.final_loss, r.initial_loss);
}

TEST(LossReport, RematchesEveryRoundAndWeightsAuxiliaryRounds) {
  DecoderConfig cfg;
  cfg.queries = 6;
  Rng rng(6);
  const DecoderParams params = DecoderParams::init(cfg, rng);
  const auto samples = gen_dataset(6, FixtureConfig{}, 8);
  for (const auto& sample : samples) {
    const auto rounds = loopback_forward(pseudo_features(sample, FeatureDims{}, 6), params);
    const LossReport report = compute_loss_report(rounds, sample, LossWeights{});
    ASSERT_EQ(report.per_round.size(), 3u);
    EXPECT_EQ(report.rounds[0].l_nr, 0.0);
    EXPECT_EQ(report.rounds[1].l_nr, 0.0);
    EXPECT_GT(report.rounds[2].l_nr, 0.0);
    EXPECT_EQ(report.total, 0.2 * (report.per_round[0] + report.per_round[1]) + report.per_round[2]);
  }
}
