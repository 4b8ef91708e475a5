#include "deris/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deris/ops.hpp"

namespace deris {

namespace {

void require_same_shape(const Tensor& z, const Tensor& g, const char* op) {
  if (z.shape() != g.shape()) {
    throw DimensionError(std::string(op) + ": logits " + shape_string(z.shape()) + " vs target " +
                         shape_string(g.shape()));
  }
}

double bce_term(double z, double g) {
  return std::max(z, 0.0) - z * g + std::log1p(std::exp(-std::abs(z)));
}

/// sigmoid'(z) without the cancellation in p * (1 - p) for large z.
double sigmoid_slope(double z) { return sigmoid(z) * sigmoid(-z); }

Tensor plane(const Tensor& m_p, std::size_t q) {
  const auto s = m_p.slice(q);
  return Tensor({m_p.dim(1), m_p.dim(2)}, std::vector<double>(s.begin(), s.end()));
}

}  // namespace

Tensor mask_to_tensor(const BinaryMask& mask) {
  Tensor t({mask.height, mask.width});
  for (std::size_t i = 0; i < mask.bits.size(); ++i) t[i] = mask.bits[i];
  return t;
}

LossGrad bce_with_logits(const Tensor& z, const Tensor& g) {
  require_same_shape(z, g, "bce_with_logits");
  const double n = static_cast<double>(z.size());
  std::vector<double> terms(z.size());
  Tensor grad(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (g[i] != 0.0 && g[i] != 1.0) {
      throw std::domain_error("bce_with_logits: target value " + std::to_string(g[i]) +
                              " is not binary");
    }
    terms[i] = bce_term(z[i], g[i]);
    grad[i] = (sigmoid(z[i]) - g[i]) / n;
  }
  return {accurate_sum(terms) / n, std::move(grad)};
}

LossGrad dice_loss(const Tensor& z, const Tensor& g) {
  require_same_shape(z, g, "dice_loss");
  std::vector<double> p(z.size()), pg(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = sigmoid(z[i]);
    pg[i] = p[i] * g[i];
  }
  const double num = 2.0 * accurate_sum(pg) + kDiceSmoothing;
  const double den = accurate_sum(p) + accurate_sum(g.values()) + kDiceSmoothing;
  Tensor grad(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double d_p = -(2.0 * g[i] * den - num) / (den * den);
    grad[i] = d_p * sigmoid_slope(z[i]);
  }
  return {1.0 - num / den, std::move(grad)};
}

LossGrad referent_loss(const Tensor& s_r, const MatchResult& match) {
  Tensor targets(s_r.shape());
  for (const auto& pair : match.pairs) targets[pair.query] = 1.0;
  return bce_with_logits(s_r, targets);
}

ScalarLossGrad nonreferent_loss(double logit, bool exists) {
  const double target = exists ? 1.0 : 0.0;
  return {bce_term(logit, target), sigmoid(logit) - target};
}

RoundLossGrad round_loss_terms(const Tensor& m_p, const Tensor& s_r,
                               const std::vector<BinaryMask>& gt, const MatchResult& match,
                               const LossWeights& weights, std::optional<double> nonref_logit,
                               bool exists) {
  if (m_p.rank() != 3 || s_r.rank() != 1 || m_p.dim(0) != s_r.dim(0)) {
    throw DimensionError("round_loss: m_p " + shape_string(m_p.shape()) + ", s_r " +
                         shape_string(s_r.shape()));
  }
  RoundLossGrad out;
  out.grad_m_p = Tensor(m_p.shape());

  if (!match.pairs.empty()) {
    const double share = 1.0 / static_cast<double>(match.pairs.size());
    std::vector<double> pair_losses;
    for (const auto& pair : match.pairs) {
      const Tensor logits = plane(m_p, pair.query);
      const Tensor target = mask_to_tensor(gt.at(pair.gt));
      const LossGrad bce = bce_with_logits(logits, target);
      const LossGrad dice = dice_loss(logits, target);
      pair_losses.push_back(bce.loss + dice.loss);
      auto g = out.grad_m_p.slice(pair.query);
      for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] += weights.mask * share * (bce.grad[i] + dice.grad[i]);
      }
    }
    out.terms.l_mask = accurate_sum(pair_losses) * share;
  }

  LossGrad referent = referent_loss(s_r, match);
  out.terms.l_r = referent.loss;
  out.grad_s_r = std::move(referent.grad);
  for (double& v : out.grad_s_r.values()) v *= weights.referent;

  if (nonref_logit) {
    const ScalarLossGrad nr = nonreferent_loss(*nonref_logit, exists);
    out.terms.l_nr = nr.loss;
    out.grad_nonref = weights.nonref * nr.grad;
  }
  out.terms.total = weights.mask * out.terms.l_mask + weights.referent * out.terms.l_r +
                    weights.nonref * out.terms.l_nr;
  return out;
}

double round_loss(const RoundOutput& round, const std::vector<BinaryMask>& gt,
                  const MatchResult& match, const LossWeights& weights, bool exists) {
  return round_loss_terms(round.m_p, round.s_r, gt, match, weights, round.nonref_logit, exists)
      .terms.total;
}

double total_loss(const std::vector<double>& per_round, double aux) {
  if (per_round.empty()) throw std::invalid_argument("total_loss needs at least one round");
  double auxiliary = 0.0;
  for (std::size_t i = 0; i + 1 < per_round.size(); ++i) auxiliary += per_round[i];
  return aux * auxiliary + per_round.back();
}

LossReport compute_loss_report(const std::vector<RoundOutput>& rounds, const Sample& sample,
                               const LossWeights& weights) {
  if (rounds.empty()) throw std::invalid_argument("compute_loss_report: no rounds");
  const std::size_t h = rounds.front().m_p.dim(1), w = rounds.front().m_p.dim(2);
  std::vector<BinaryMask> gt;
  for (const auto& m : sample.gt_masks) gt.push_back(downsample_majority(m, h, w));

  LossReport report;
  report.weights = weights;
  for (const auto& round : rounds) {
    const MatchResult match = hungarian(match_cost(round.m_p, round.s_r, gt));
    const RoundLossTerms terms =
        round_loss_terms(round.m_p, round.s_r, gt, match, weights, round.nonref_logit,
                         !sample.is_nonreferent)
            .terms;
    report.rounds.push_back(terms);
    report.per_round.push_back(terms.total);
  }
  report.total = total_loss(report.per_round, weights.aux);
  return report;
}

double finite_diff_check(const std::function<LossGrad(const Tensor&)>& loss_fn,
                         const Tensor& point, double h) {
  if (!(h >= 1e-8 && h <= 1e-4)) {
    throw std::invalid_argument("finite_diff_check: step must lie in [1e-8, 1e-4]");
  }
  const Tensor analytic = loss_fn(point).grad;
  double worst = 0.0;
  Tensor probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double hi = point[i] + h;
    const double lo = point[i] - h;
    probe[i] = hi;
    const double up = loss_fn(probe).loss;
    probe[i] = lo;
    const double down = loss_fn(probe).loss;
    probe[i] = point[i];
    // Divide by the representable step, not 2h.
    const double numeric = (up - down) / (hi - lo);
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / scale);
  }
  return worst;
}

}  // namespace deris
