#include "deris/verify.hpp"

#include <cmath>
#include <stdexcept>

#include "deris/decoder.hpp"
#include "deris/metrics.hpp"
#include "deris/ops.hpp"

namespace deris {

namespace {

BinaryMask rectangle(std::size_t h, std::size_t w, std::size_t r0, std::size_t r1, std::size_t c0,
                     std::size_t c1) {
  BinaryMask m(h, w);
  for (std::size_t i = r0; i < r1; ++i) {
    for (std::size_t j = c0; j < c1; ++j) m.at(i, j) = 1;
  }
  return m;
}

/// 1 x 16 strip with cells [begin, end) on.
BinaryMask strip(std::size_t begin, std::size_t end) { return rectangle(1, 16, 0, 1, begin, end); }

void expect_near(OracleCheck& check, const std::string& name, double got, double want,
                 double tol = 1e-12) {
  const double err = std::abs(got - want);
  check.max_abs_error = std::max(check.max_abs_error, err);
  if (!(err <= tol)) {
    check.failures.push_back(name + ": got " + std::to_string(got) + ", want " +
                             std::to_string(want));
  }
}

Json oracle_json(const OracleCheck& check) {
  return {{"failures", check.failures},
          {"max_abs_error", check.max_abs_error},
          {"passed", check.passed()}};
}

}  // namespace

Fault parse_fault(const std::string& name) {
  if (name.empty() || name == "none") return Fault::none;
  if (name == "dice-grad") return Fault::dice_grad;
  throw std::invalid_argument("unknown fault \"" + name + "\"");
}

CostMatrix random_cost_matrix(Rng& rng, std::size_t max_queries) {
  const std::size_t rows = 1 + rng.below(max_queries);
  const std::size_t cols = rng.below(rows + 1);
  const bool integral = rng.bernoulli(0.5);
  CostMatrix cost(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      cost.at(r, c) = integral ? static_cast<double>(rng.below(4)) : rng.uniform(0.0, 10.0);
    }
  }
  return cost;
}

MatchingCheck check_matching(std::uint64_t seed, std::size_t cases, std::size_t max_queries) {
  const Rng root(seed);
  MatchingCheck check;
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = root.child(i);
    const CostMatrix cost = random_cost_matrix(rng, max_queries);
    const bool integral = std::ranges::all_of(cost.values(), [](double v) { return v == std::floor(v); });
    check.tie_cases += integral && cost.cols() > 0;
    const MatchResult fast = hungarian(cost);
    const MatchResult slow = brute_force_assign(cost);
    ++check.cases;
    check.total_mismatches += fast.total_cost != slow.total_cost;
    check.assignment_mismatches += fast.pairs != slow.pairs;
  }
  return check;
}

GradientCheck check_gradients(std::uint64_t seed, std::size_t cases, std::size_t size, double h,
                              Fault fault) {
  const Rng root(seed);
  GradientCheck check;
  for (std::size_t i = 0; i < cases; ++i) {
    Rng rng = root.child(i);
    Tensor z({size, size});
    for (double& v : z.values()) v = rng.uniform(-3.0, 3.0);
    Tensor g({size, size});
    for (double& v : g.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;

    const auto bce = [&](const Tensor& x) { return bce_with_logits(x, g); };
    const auto dice = [&](const Tensor& x) {
      LossGrad out = dice_loss(x, g);
      if (fault == Fault::dice_grad) {
        for (double& v : out.grad.values()) v *= 1.001;
      }
      return out;
    };
    check.max_rel_error_bce = std::max(check.max_rel_error_bce, finite_diff_check(bce, z, h));
    check.max_rel_error_dice = std::max(check.max_rel_error_dice, finite_diff_check(dice, z, h));
    ++check.cases;
  }
  return check;
}

OracleCheck check_metric_oracles() {
  OracleCheck check;
  // (I, U): (1, 2), (9, 10), empty-empty, (0, 3) with empty GT, (4, 4).
  const std::vector<std::pair<BinaryMask, BinaryMask>> fixture = {
      {strip(0, 1), strip(0, 2)},  {strip(0, 9), strip(0, 10)}, {strip(0, 0), strip(0, 0)},
      {strip(5, 8), strip(0, 0)},  {strip(3, 7), strip(3, 7)},
  };
  std::vector<SampleEval> evals;
  for (const auto& [pred, gt] : fixture) evals.push_back(sample_iou(pred, gt));

  expect_near(check, "empty-empty iou", evals[2].iou, 1.0, 0.0);
  expect_near(check, "giou", giou(evals), 0.68);
  expect_near(check, "ciou", ciou(evals), 14.0 / 19.0);
  const auto nacc = n_acc(evals);
  if (!nacc) check.failures.push_back("n_acc absent");
  else expect_near(check, "n_acc", *nacc, 0.5);
  const auto pr = pr_at(evals, 0.9);
  if (!pr) check.failures.push_back("pr@0.9 absent");
  else expect_near(check, "pr@0.9", *pr, 1.0 / 3.0);
  const auto m = miou(evals);
  if (!m) check.failures.push_back("miou absent");
  else expect_near(check, "miou", *m, 0.8);

  const std::vector<SampleEval> pair = {evals[0], evals[1]};
  expect_near(check, "pair ciou", ciou(pair), 10.0 / 12.0);
  expect_near(check, "pair giou", giou(pair), 0.7);
  if (ciou(pair) == giou(pair)) check.failures.push_back("pair ciou equals giou");
  return check;
}

OracleCheck check_total_loss_structure() {
  OracleCheck check;
  expect_near(check, "three unit rounds", total_loss({1.0, 1.0, 1.0}, 0.2), 1.4, 0.0);
  expect_near(check, "single round", total_loss({0.8125}, 0.2), 0.8125, 0.0);
  expect_near(check, "zero aux", total_loss({3.0, 5.0, 0.5}, 0.0), 0.5, 0.0);
  return check;
}

DescentResult run_descent(std::uint64_t seed, const DescentConfig& cfg) {
  if (cfg.size < 16) throw std::invalid_argument("run_descent: grid must be at least 16x16");
  Rng rng(seed);
  const std::size_t n = cfg.queries, s = cfg.size;
  const std::vector<BinaryMask> gt = {rectangle(s, s, 2, 7, 2, 8), rectangle(s, s, 9, 14, 8, 14)};
  const BinaryMask target = mask_union(gt, s, s);

  Tensor m_p({n, s, s});
  Tensor s_r({n});
  for (double& v : m_p.values()) v = rng.uniform(-0.1, 0.1);
  for (double& v : s_r.values()) v = rng.uniform(-0.1, 0.1);
  double nonref = 0.0;

  const auto iou_now = [&] {
    const Prediction pred = predict(s_r, m_p, sigmoid(nonref), kDefaultReferentThreshold, false);
    return sample_iou(pred.mask, target).iou;
  };

  DescentResult result;
  result.final_iou = iou_now();
  for (std::size_t step = 0; step <= cfg.max_steps; ++step) {
    if (result.final_iou > cfg.target_iou) {
      result.reached = true;
      result.steps = step;
      break;
    }
    if (step == cfg.max_steps) {
      result.steps = step;
      break;
    }
    const MatchResult match = hungarian(match_cost(m_p, s_r, gt));
    const RoundLossGrad g = round_loss_terms(m_p, s_r, gt, match, cfg.weights, nonref, true);
    if (step == 0) result.initial_loss = g.terms.total;
    result.final_loss = g.terms.total;
    for (std::size_t i = 0; i < m_p.size(); ++i) m_p[i] -= cfg.step * g.grad_m_p[i];
    for (std::size_t i = 0; i < s_r.size(); ++i) s_r[i] -= cfg.step * g.grad_s_r[i];
    nonref -= cfg.step * g.grad_nonref;
    result.final_iou = iou_now();
  }
  return result;
}

VerifyReport run_verify(const VerifyOptions& options) {
  VerifyReport report;
  Json checks;

  const MatchingCheck matching =
      check_matching(derive_seed(options.seed, 1), options.matching_cases);
  checks["matching"] = {{"cases", matching.cases},
                        {"tie_cases", matching.tie_cases},
                        {"total_mismatches", matching.total_mismatches},
                        {"assignment_mismatches", matching.assignment_mismatches},
                        {"passed", matching.passed()}};

  const GradientCheck gradients = check_gradients(derive_seed(options.seed, 2),
                                                  options.gradient_cases, 16, kFiniteDiffStep,
                                                  options.fault);
  checks["gradients"] = {{"cases", gradients.cases},
                         {"h", kFiniteDiffStep},
                         {"tolerance", kGradientTolerance},
                         {"max_rel_error", gradients.max_rel_error()},
                         {"max_rel_error_bce", gradients.max_rel_error_bce},
                         {"max_rel_error_dice", gradients.max_rel_error_dice},
                         {"passed", gradients.passed(kGradientTolerance)}};

  const OracleCheck metrics = check_metric_oracles();
  checks["metric_oracles"] = oracle_json(metrics);
  const OracleCheck total = check_total_loss_structure();
  checks["total_loss"] = oracle_json(total);

  const DescentResult descent = run_descent(derive_seed(options.seed, 3));
  checks["descent"] = {{"reached", descent.reached},
                       {"steps", descent.steps},
                       {"final_iou", descent.final_iou},
                       {"initial_loss", descent.initial_loss},
                       {"final_loss", descent.final_loss},
                       {"passed", descent.reached}};

  report.passed = matching.passed() && gradients.passed(kGradientTolerance) && metrics.passed() &&
                  total.passed() && descent.reached;
  report.json = {{"seed", options.seed},
                 {"fault", options.fault == Fault::none ? "none" : "dice-grad"},
                 {"checks", checks},
                 {"passed", report.passed}};
  return report;
}

}  // namespace deris
