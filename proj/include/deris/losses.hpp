#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "deris/decoder.hpp"
#include "deris/fixtures.hpp"
#include "deris/mask.hpp"
#include "deris/matching.hpp"
#include "deris/tensor.hpp"

namespace deris {

struct LossGrad {
  double loss = 0.0;
  Tensor grad;  // same shape as the logits
};

struct ScalarLossGrad {
  double loss = 0.0;
  double grad = 0.0;
};

inline constexpr double kDiceSmoothing = 1.0;

/// [H x W] tensor of 0.0 / 1.0.
Tensor mask_to_tensor(const BinaryMask& mask);

/// Mean of max(z, 0) - z*g + log(1 + exp(-|z|)); grad = (sigmoid(z) - g) / n.
/// Throws std::domain_error if g has entries other than 0 and 1.
LossGrad bce_with_logits(const Tensor& z, const Tensor& g);

/// 1 - (2 * sum(p*g) + eps) / (sum(p) + sum(g) + eps) with p = sigmoid(z).
LossGrad dice_loss(const Tensor& z, const Tensor& g);

/// BCE over all queries: target 1 for matched queries, 0 otherwise.
LossGrad referent_loss(const Tensor& s_r, const MatchResult& match);

/// BCE on the pooled existence logit with target 1 when a referent exists.
ScalarLossGrad nonreferent_loss(double logit, bool exists);

struct LossWeights {
  double mask = 1.0;
  double referent = 1.0;
  double nonref = 1.0;
  double aux = 0.2;
};

struct RoundLossTerms {
  double l_mask = 0.0;
  double l_r = 0.0;
  double l_nr = 0.0;
  double total = 0.0;
};

struct RoundLossGrad {
  RoundLossTerms terms;
  Tensor grad_m_p;
  Tensor grad_s_r;
  double grad_nonref = 0.0;
};

/// One round's weighted loss and its gradient with respect to the round's
/// logits. L_mask averages (BCE + Dice) over matched pairs and is 0 without
/// pairs. L_nr is produced only when `nonref_logit` is given (the final
/// round). `gt` must be at the mask-head resolution.
RoundLossGrad round_loss_terms(const Tensor& m_p, const Tensor& s_r,
                               const std::vector<BinaryMask>& gt, const MatchResult& match,
                               const LossWeights& weights, std::optional<double> nonref_logit,
                               bool exists);

double round_loss(const RoundOutput& round, const std::vector<BinaryMask>& gt,
                  const MatchResult& match, const LossWeights& weights, bool exists);

/// aux * sum(per_round[0 .. n-2]) + per_round[n-1].
double total_loss(const std::vector<double>& per_round, double aux);

struct LossReport {
  std::vector<RoundLossTerms> rounds;
  std::vector<double> per_round;
  double total = 0.0;
  LossWeights weights;
};

/// Downsamples the sample's GT to the mask-head grid, re-matches every round
/// against its own masks and accumulates the per-round and total losses.
LossReport compute_loss_report(const std::vector<RoundOutput>& rounds, const Sample& sample,
                               const LossWeights& weights);

/// Max over coordinates of |analytic - numeric| / max(|analytic|, |numeric|,
/// 1e-12), with numeric = (f(x + h e_i) - f(x - h e_i)) / 2h. h must lie in
/// [1e-8, 1e-4].
double finite_diff_check(const std::function<LossGrad(const Tensor&)>& loss_fn,
                         const Tensor& point, double h);

}  // namespace deris
