#pragma once

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "pte/error.hpp"

namespace pte {

/// Minimum-cost perfect matching on a square cost matrix (shortest augmenting
/// paths with row/column potentials, O(n^3)). Returns col[i] matched to row i.
template <typename Derived>
std::vector<Eigen::Index> solve_assignment(const Eigen::MatrixBase<Derived>& cost) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = cost.rows();
  if (cost.cols() != n) throw InputError("solve_assignment: cost matrix must be square");
  if (n == 0) return {};

  const Scalar inf = std::numeric_limits<Scalar>::infinity();
  // 1-based internal indexing; index 0 is the virtual source column.
  std::vector<Scalar> u(n + 1, 0), v(n + 1, 0);
  std::vector<Eigen::Index> owner(n + 1, 0), way(n + 1, 0);

  for (Eigen::Index row = 1; row <= n; ++row) {
    owner[0] = row;
    Eigen::Index col0 = 0;
    std::vector<Scalar> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const Eigen::Index r = owner[col0];
      Scalar delta = inf;
      Eigen::Index col1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Scalar reduced = cost(r - 1, j - 1) - u[r] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const Eigen::Index col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<Eigen::Index> match(n);
  for (Eigen::Index j = 1; j <= n; ++j) match[owner[j] - 1] = j - 1;
  return match;
}

}  // namespace pte
