#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "deris/annotations.hpp"
#include "deris/losses.hpp"
#include "deris/matching.hpp"

namespace deris {

/// Deliberate defects used to prove the checks can fail.
enum class Fault { none, dice_grad };

Fault parse_fault(const std::string& name);

/// Random cost matrices with up to `max_queries` rows. Every other matrix
/// takes small integer entries so that exact ties are common.
CostMatrix random_cost_matrix(Rng& rng, std::size_t max_queries);

struct MatchingCheck {
  std::size_t cases = 0;
  std::size_t tie_cases = 0;
  std::size_t total_mismatches = 0;
  std::size_t assignment_mismatches = 0;
  bool passed() const { return cases > 0 && total_mismatches == 0 && assignment_mismatches == 0; }
};

MatchingCheck check_matching(std::uint64_t seed, std::size_t cases, std::size_t max_queries = 7);

struct GradientCheck {
  std::size_t cases = 0;
  double max_rel_error_bce = 0.0;
  double max_rel_error_dice = 0.0;
  double max_rel_error() const { return std::max(max_rel_error_bce, max_rel_error_dice); }
  bool passed(double tolerance) const { return cases > 0 && max_rel_error() < tolerance; }
};

inline constexpr double kGradientTolerance = 1e-5;
inline constexpr double kFiniteDiffStep = 1e-6;

/// Logits uniform in [-3, 3), GT pixels independent fair coin flips, on a
/// size x size grid.
GradientCheck check_gradients(std::uint64_t seed, std::size_t cases, std::size_t size = 16,
                              double h = kFiniteDiffStep, Fault fault = Fault::none);

struct OracleCheck {
  std::vector<std::string> failures;
  double max_abs_error = 0.0;
  bool passed() const { return failures.empty(); }
};

/// Metrics of a fixed five-sample fixture against hand-computed values.
OracleCheck check_metric_oracles();

/// Auxiliary weighting of per-round losses and its one-round degenerate case.
OracleCheck check_total_loss_structure();

struct DescentConfig {
  std::size_t queries = 5;
  std::size_t size = 16;
  std::size_t max_steps = 500;
  double step = 5.0;
  double target_iou = 0.99;
  LossWeights weights;
};

struct DescentResult {
  bool reached = false;
  std::size_t steps = 0;  // steps taken when the target was first met
  double final_iou = 0.0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Plain gradient descent on free mask and referent logits (and the existence
/// logit) against two fixed GT rectangles, re-matching every step. IoU is
/// measured on the union of selected masks at the default threshold.
DescentResult run_descent(std::uint64_t seed, const DescentConfig& cfg = {});

struct VerifyOptions {
  std::uint64_t seed = 0;
  std::size_t matching_cases = 1000;
  std::size_t gradient_cases = 100;
  Fault fault = Fault::none;
};

struct VerifyReport {
  Json json;
  bool passed = false;
};

VerifyReport run_verify(const VerifyOptions& options);

}  // namespace deris
