#include "deris/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "deris/losses.hpp"
#include "deris/ops.hpp"

namespace deris {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw std::invalid_argument("CostMatrix: " + std::to_string(values_.size()) +
                                " values for " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

CostMatrix match_cost(const Tensor& m_p, const Tensor& s_r, const std::vector<BinaryMask>& gt) {
  if (m_p.rank() != 3 || s_r.rank() != 1 || s_r.dim(0) != m_p.dim(0)) {
    throw DimensionError("match_cost: m_p " + shape_string(m_p.shape()) + ", s_r " +
                         shape_string(s_r.shape()));
  }
  const std::size_t n = m_p.dim(0), h = m_p.dim(1), w = m_p.dim(2);
  std::vector<Tensor> targets;
  for (const auto& g : gt) {
    if (g.height != h || g.width != w) {
      throw DimensionError("match_cost: GT mask " + std::to_string(g.height) + "x" +
                           std::to_string(g.width) + " vs logits " + shape_string(m_p.shape()));
    }
    targets.push_back(mask_to_tensor(g));
  }
  CostMatrix cost(n, gt.size());
  for (std::size_t q = 0; q < n; ++q) {
    const Tensor logits({h, w}, std::vector<double>(m_p.slice(q).begin(), m_p.slice(q).end()));
    const double referent = 1.0 - sigmoid(s_r[q]);
    for (std::size_t t = 0; t < targets.size(); ++t) {
      cost.at(q, t) = bce_with_logits(logits, targets[t]).loss +
                      dice_loss(logits, targets[t]).loss + referent;
    }
  }
  return cost;
}

double tie_tolerance(const CostMatrix& cost) {
  double peak = 1.0;
  for (double v : cost.values()) peak = std::max(peak, std::abs(v));
  return 1e-9 * peak;
}

namespace {

/// Square Kuhn-Munkres with potentials, O(n^3). Returns the column chosen
/// for each row.
std::vector<std::size_t> solve_square(const std::vector<double>& a, std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> col_for_row(n, 0);
  for (std::size_t j = 1; j <= n; ++j) col_for_row[p[j] - 1] = j - 1;
  return col_for_row;
}

/// Optimal query for each listed column, restricted to the listed rows.
/// Virtual columns padded at (max entry + 1) make the problem square.
std::vector<std::size_t> optimal_assignment(const CostMatrix& cost,
                                            const std::vector<std::size_t>& rows,
                                            const std::vector<std::size_t>& cols) {
  if (cols.empty()) return {};
  const std::size_t n = rows.size();
  double peak = -std::numeric_limits<double>::infinity();
  for (auto r : rows) {
    for (auto c : cols) peak = std::max(peak, cost.at(r, c));
  }
  std::vector<double> square(n * n, peak + 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) square[i * n + j] = cost.at(rows[i], cols[j]);
  }
  const auto col_for_row = solve_square(square, n);
  std::vector<std::size_t> query_for_col(cols.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (col_for_row[i] < cols.size()) query_for_col[col_for_row[i]] = rows[i];
  }
  return query_for_col;
}

double assignment_total(const CostMatrix& cost, const std::vector<std::size_t>& query_for_gt) {
  double total = 0.0;
  for (std::size_t t = 0; t < query_for_gt.size(); ++t) total += cost.at(query_for_gt[t], t);
  return total;
}

MatchResult to_result(const CostMatrix& cost, const std::vector<std::size_t>& query_for_gt) {
  MatchResult result;
  std::vector<char> taken(cost.rows(), 0);
  for (std::size_t t = 0; t < query_for_gt.size(); ++t) {
    result.pairs.push_back({query_for_gt[t], t});
    taken[query_for_gt[t]] = 1;
  }
  for (std::size_t q = 0; q < cost.rows(); ++q) {
    if (!taken[q]) result.unmatched.push_back(q);
  }
  result.total_cost = assignment_total(cost, query_for_gt);
  return result;
}

void check_matrix(const CostMatrix& cost) {
  if (cost.cols() > cost.rows()) {
    throw MatchSizeError("matching needs at least as many queries (" +
                         std::to_string(cost.rows()) + ") as GT instances (" +
                         std::to_string(cost.cols()) + ")");
  }
  for (double v : cost.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("matching: cost matrix is not finite");
  }
}

}  // namespace

MatchResult hungarian(const CostMatrix& cost) {
  check_matrix(cost);
  const std::size_t rows = cost.rows(), cols = cost.cols();
  std::vector<std::size_t> all_rows(rows), all_cols(cols);
  for (std::size_t i = 0; i < rows; ++i) all_rows[i] = i;
  for (std::size_t j = 0; j < cols; ++j) all_cols[j] = j;

  std::vector<std::size_t> current = optimal_assignment(cost, all_rows, all_cols);
  const double bound = assignment_total(cost, current) + tie_tolerance(cost);

  // Fix GT columns in order, each to the smallest query that still admits a
  // completion within the tie tolerance of the optimum.
  std::vector<char> used(rows, 0);
  double prefix = 0.0;
  for (std::size_t t = 0; t < cols; ++t) {
    std::vector<std::size_t> rest_cols;
    for (std::size_t j = t + 1; j < cols; ++j) rest_cols.push_back(j);
    for (std::size_t q = 0; q < current[t]; ++q) {
      if (used[q]) continue;
      std::vector<std::size_t> rest_rows;
      for (std::size_t r = 0; r < rows; ++r) {
        if (!used[r] && r != q) rest_rows.push_back(r);
      }
      const auto tail = optimal_assignment(cost, rest_rows, rest_cols);
      double tail_total = 0.0;
      for (std::size_t k = 0; k < tail.size(); ++k) tail_total += cost.at(tail[k], rest_cols[k]);
      if (prefix + cost.at(q, t) + tail_total <= bound) {
        current[t] = q;
        for (std::size_t k = 0; k < tail.size(); ++k) current[rest_cols[k]] = tail[k];
        break;
      }
    }
    used[current[t]] = 1;
    prefix += cost.at(current[t], t);
  }
  return to_result(cost, current);
}

MatchResult brute_force_assign(const CostMatrix& cost) {
  check_matrix(cost);
  if (cost.cols() > 8) {
    throw MatchSizeError("brute_force_assign supports at most 8 GT columns, got " +
                         std::to_string(cost.cols()));
  }
  const std::size_t rows = cost.rows(), cols = cost.cols();
  std::vector<std::size_t> chosen(cols, 0);
  std::vector<char> used(rows, 0);

  // Visits injections in lexicographic order of the per-GT query list.
  const auto enumerate = [&](auto&& self, std::size_t t, const auto& visit) -> bool {
    if (t == cols) return visit();
    for (std::size_t q = 0; q < rows; ++q) {
      if (used[q]) continue;
      used[q] = 1;
      chosen[t] = q;
      const bool stop = self(self, t + 1, visit);
      used[q] = 0;
      if (stop) return true;
    }
    return false;
  };

  double best = std::numeric_limits<double>::infinity();
  enumerate(enumerate, 0, [&] {
    best = std::min(best, assignment_total(cost, chosen));
    return false;
  });
  const double bound = best + tie_tolerance(cost);
  std::vector<std::size_t> winner;
  enumerate(enumerate, 0, [&] {
    if (assignment_total(cost, chosen) <= bound) {
      winner = chosen;
      return true;
    }
    return false;
  });
  return to_result(cost, winner);
}

}  // namespace deris
