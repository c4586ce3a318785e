#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "gna/assignment.hpp"

using namespace gna;

namespace {

double perm_cost(const std::vector<double>& cost, int n, const std::vector<int>& perm) {
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += cost[static_cast<std::size_t>(i) * n + perm[i]];
  return total;
}

double brute_min_cost(const std::vector<double>& cost, int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = perm_cost(cost, n, perm);
  while (std::next_permutation(perm.begin(), perm.end()))
    best = std::min(best, perm_cost(cost, n, perm));
  return best;
}

bool is_permutation_of_indices(const std::vector<int>& p, int n) {
  std::vector<bool> seen(n, false);
  for (int v : p) {
    if (v < 0 || v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return static_cast<int>(p.size()) == n;
}

}  // namespace

TEST_CASE("jv solver matches brute-force minimum on random matrices") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unif(-5.0, 5.0);
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(t % 5);
    std::vector<double> cost(static_cast<std::size_t>(n) * n);
    for (auto& c : cost) c = unif(rng);
    auto perm = solve_assignment_min(cost, n);
    REQUIRE(is_permutation_of_indices(perm, n));
    CHECK(perm_cost(cost, n, perm) == doctest::Approx(brute_min_cost(cost, n)).epsilon(1e-12));
  }
}

TEST_CASE("max_assignment maximizes soft-matching mass") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int t = 0; t < 30; ++t) {
    const int n = 2 + static_cast<int>(t % 5);
    std::vector<double> soft(static_cast<std::size_t>(n) * n);
    for (auto& s : soft) s = unif(rng);
    auto perm = max_assignment(soft, n);
    REQUIRE(is_permutation_of_indices(perm, n));
    CHECK(perm_cost(soft, n, perm) == doctest::Approx(-brute_min_cost(
              [&] {
                std::vector<double> neg(soft.size());
                for (std::size_t i = 0; i < soft.size(); ++i) neg[i] = -soft[i];
                return neg;
              }(),
              n)).epsilon(1e-12));
  }
}

TEST_CASE("max_assignment prefers the identity under ties") {
  SUBCASE("uniform matrix") {
    std::vector<double> soft(16, 0.25);
    auto perm = max_assignment(soft, 4);
    for (int i = 0; i < 4; ++i) CHECK(perm[i] == i);
  }
  SUBCASE("two tied rows") {
    // Rows 0 and 1 are identical; both (0->0,1->1) and (0->1,1->0) are optimal.
    std::vector<double> soft = {0.5, 0.5, 0.0,
                                0.5, 0.5, 0.0,
                                0.0, 0.0, 1.0};
    auto perm = max_assignment(soft, 3);
    CHECK(perm[0] == 0);
    CHECK(perm[1] == 1);
    CHECK(perm[2] == 2);
  }
}

TEST_CASE("assignment handles the 1x1 case") {
  CHECK(solve_assignment_min({3.0}, 1) == std::vector<int>{0});
  CHECK(max_assignment({0.1}, 1) == std::vector<int>{0});
}
