#pragma once

#include <vector>

namespace gna {

/// Exact minimum-cost linear assignment (Jonker-Volgenant style shortest
/// augmenting paths, O(n^3)). cost is a square row-major matrix; returns
/// row -> column. Deterministic for fixed input.
std::vector<int> solve_assignment_min(const std::vector<double>& cost, int n);

/// Permutation maximizing sum soft[i, sigma(i)] for a square nonnegative
/// matrix. Ties are broken toward the identity via an infinitesimal diagonal
/// preference. Returns row -> column.
std::vector<int> max_assignment(const std::vector<double>& soft, int n);

}  // namespace gna
