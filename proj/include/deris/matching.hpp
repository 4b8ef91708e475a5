#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "deris/mask.hpp"
#include "deris/tensor.hpp"

namespace deris {

/// Rows are predicted queries, columns ground-truth instances.
class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct MatchPair {
  std::size_t query = 0;
  std::size_t gt = 0;
  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

/// `pairs` holds exactly one entry per GT column, ordered by GT index.
struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched;  // ascending query ids
  double total_cost = 0.0;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

class MatchSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// cost[n, t] = BCE(m_p[n], gt[t]) + Dice(m_p[n], gt[t]) + (1 - sigmoid(s_r[n])).
/// `gt` masks must already be at the mask-head resolution. No GT yields a
/// N_q x 0 matrix.
CostMatrix match_cost(const Tensor& m_p, const Tensor& s_r, const std::vector<BinaryMask>& gt);

/// Optimal assignment of every column to a distinct row. Requires cols <= rows.
///
/// Ties are broken deterministically: among assignments whose total is within
/// tie_tolerance() of the optimum, the one whose query list (in GT order) is
/// lexicographically smallest wins. total_cost sums the chosen entries in GT
/// order.
MatchResult hungarian(const CostMatrix& cost);

/// Exhaustive search over all injections of columns into rows with the same
/// tie-break as hungarian(). Throws MatchSizeError for more than 8 columns.
MatchResult brute_force_assign(const CostMatrix& cost);

/// 1e-9 * max(1, max |entry|).
double tie_tolerance(const CostMatrix& cost);

}  // namespace deris
