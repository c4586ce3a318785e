#include "gna/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gna {

std::vector<int> solve_assignment_min(const std::vector<double>& cost, int n) {
  if (static_cast<int>(cost.size()) != n * n)
    throw std::invalid_argument("solve_assignment_min: cost matrix is not n x n");
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // 1-based dual potentials u (rows), v (columns); p[j] = row assigned to column j.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
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
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j]) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

std::vector<int> max_assignment(const std::vector<double>& soft, int n) {
  double scale = 0.0;
  for (double s : soft) scale = std::max(scale, std::abs(s));
  const double diag_bonus = (scale > 0.0 ? scale : 1.0) * 1e-12;
  std::vector<double> cost(soft.size());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[i * n + j] = -soft[i * n + j] - (i == j ? diag_bonus : 0.0);
  return solve_assignment_min(cost, n);
}

}  // namespace gna
