#pragma once

#include "lmbox/geometry.hpp"

#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace lmbox {

/// Sentinel cost for forbidden pairings. Large enough never to be picked
/// over any real cost, small enough that potential arithmetic stays finite.
inline constexpr double kForbiddenCost = 1e18;

/// A solution that had to use a forbidden edge reports a cost above this.
inline constexpr double kInfeasibleCost = 1e17;

/// Minimum-cost assignment on an n x m matrix with n <= m: every row gets a
/// distinct column. Shortest augmenting paths with potentials; entries may
/// be negative; use kForbiddenCost to rule a pairing out. Returns
/// row -> column.
inline std::vector<int> solve_assignment(const MatX& cost, double* total_cost = nullptr) {
  const int n = static_cast<int>(cost.rows());
  const int m = static_cast<int>(cost.cols());
  if (n > m) throw std::invalid_argument("solve_assignment: more rows than columns");
  if (n == 0) {
    if (total_cost) *total_cost = 0.0;
    return {};
  }
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> match(m + 1, 0), way(m + 1, 0);  // match[j]: 1-based row on column j
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> min_slack(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = match[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  double total = 0.0;
  for (int j = 1; j <= m; ++j) {
    if (match[j] == 0) continue;
    row_to_col[match[j] - 1] = j - 1;
    total += cost(match[j] - 1, j - 1);
  }
  if (total_cost) *total_cost = total;
  return row_to_col;
}

struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Ranked assignments in nondecreasing cost order, at most k of them,
/// skipping any that would need a forbidden edge. Classic best-first
/// partitioning: each emitted solution spawns subproblems that ban one of
/// its pairs and pin the preceding ones.
inline std::vector<Assignment> k_best_assignments(const MatX& cost, int k) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() < n) throw std::invalid_argument("k_best_assignments: more rows than columns");
  if (k < 1) throw std::invalid_argument("k_best_assignments: k must be >= 1");

  struct Node {
    MatX cost;
    Assignment sol;
    long seq = 0;  // insertion order, makes equal-cost pops deterministic
  };
  auto worse = [](const Node& a, const Node& b) {
    if (a.sol.cost != b.sol.cost) return a.sol.cost > b.sol.cost;
    return a.seq > b.seq;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(worse)> frontier(worse);
  long seq = 0;

  auto try_push = [&](MatX m) {
    Assignment sol;
    sol.row_to_col = solve_assignment(m, &sol.cost);
    if (sol.cost >= kInfeasibleCost) return;
    frontier.push(Node{std::move(m), std::move(sol), seq++});
  };
  try_push(cost);

  std::vector<Assignment> out;
  const int cols = static_cast<int>(cost.cols());
  while (!frontier.empty() && static_cast<int>(out.size()) < k) {
    Node node = frontier.top();
    frontier.pop();
    out.push_back(node.sol);
    for (int i = 0; i < n; ++i) {
      MatX child = node.cost;
      // Pin the first i pairs of this solution, ban the i-th.
      for (int r = 0; r < i; ++r) {
        const int c = node.sol.row_to_col[r];
        for (int j = 0; j < cols; ++j) {
          if (j != c) child(r, j) = kForbiddenCost;
        }
        for (int rr = 0; rr < n; ++rr) {
          if (rr != r) child(rr, c) = kForbiddenCost;
        }
      }
      child(i, node.sol.row_to_col[i]) = kForbiddenCost;
      try_push(std::move(child));
    }
  }
  return out;
}

}  // namespace lmbox
