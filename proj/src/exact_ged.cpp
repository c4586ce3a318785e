#include "gna/exact_ged.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <stdexcept>

namespace gna {

namespace {

constexpr int kMaxAStarNodes = 31;  // assignment array / bitmask width

struct DenseLabels {
  std::vector<int> l1, l2;  // labels remapped to [0, count)
  int count = 0;
};

DenseLabels remap_labels(const Graph& g1, const Graph& g2) {
  DenseLabels out;
  std::map<int, int> ids;
  auto remap = [&](const std::vector<int>& in, std::vector<int>& res) {
    for (int l : in) {
      auto [it, fresh] = ids.try_emplace(l, out.count);
      if (fresh) ++out.count;
      res.push_back(it->second);
    }
  };
  remap(g1.node_labels, out.l1);
  remap(g2.node_labels, out.l2);
  return out;
}

std::vector<std::vector<char>> adjacency_bool(const Graph& g) {
  std::vector<std::vector<char>> a(g.num_nodes(), std::vector<char>(g.num_nodes(), 0));
  for (auto [u, v] : g.edges) {
    a[u][v] = 1;
    a[v][u] = 1;
  }
  return a;
}

struct AStarState {
  std::array<std::int8_t, kMaxAStarNodes> assign;  // g2 index or -1 (delete); valid up to depth
  std::uint32_t used = 0;                          // g2 nodes consumed
  int g = 0;
  int f = 0;
  std::int8_t depth = 0;
};

// Lexicographic key for deterministic tie-breaking; deletions sort last.
int lex_key(std::int8_t a, int n2) { return a < 0 ? n2 : a; }

}  // namespace

ExactGedResult exact_ged(const Graph& g1, const Graph& g2, long long budget) {
  if (g1.num_nodes() == 0 || g2.num_nodes() == 0)
    throw std::invalid_argument("exact_ged: both graphs must be nonempty");
  if (g1.num_nodes() > kMaxAStarNodes || g2.num_nodes() > kMaxAStarNodes)
    throw std::invalid_argument("exact_ged: graph larger than supported size");

  const int n1 = g1.num_nodes(), n2 = g2.num_nodes();
  const auto adj1 = adjacency_bool(g1);
  const auto adj2 = adjacency_bool(g2);
  const auto labels = remap_labels(g1, g2);
  const int e2_total = g2.num_edges();

  // r1[k]: g1 edges with an endpoint >= k (not yet accounted at depth k).
  std::vector<int> r1(n1 + 1, 0);
  for (int k = 0; k <= n1; ++k)
    for (auto [u, v] : g1.edges)
      if (u >= k || v >= k) ++r1[k];

  // Remaining label counts for g1 suffixes.
  std::vector<std::vector<int>> rem1(n1 + 1, std::vector<int>(labels.count, 0));
  for (int k = n1 - 1; k >= 0; --k) {
    rem1[k] = rem1[k + 1];
    ++rem1[k][labels.l1[k]];
  }
  std::vector<int> total2(labels.count, 0);
  for (int l : labels.l2) ++total2[l];

  auto edges_both_used = [&](std::uint32_t mask) {
    int c = 0;
    for (auto [u, v] : g2.edges)
      if ((mask >> u & 1) && (mask >> v & 1)) ++c;
    return c;
  };

  auto heuristic = [&](int depth, std::uint32_t used, int used_count) {
    const int u1 = n1 - depth;
    const int u2 = n2 - used_count;
    int inter = 0;
    for (int l = 0; l < labels.count; ++l) {
      int rem2 = total2[l];
      for (int w = 0; w < n2; ++w)
        if ((used >> w & 1) && labels.l2[w] == l) --rem2;
      inter += std::min(rem1[depth][l], rem2);
    }
    const int node_lb = std::max(u1, u2) - inter;
    const int r2 = e2_total - edges_both_used(used);
    return node_lb + std::abs(r1[depth] - r2);
  };

  std::deque<AStarState> states;
  auto cmp = [&](std::size_t a, std::size_t b) {
    const AStarState& sa = states[a];
    const AStarState& sb = states[b];
    if (sa.f != sb.f) return sa.f > sb.f;          // min-f first
    if (sa.depth != sb.depth) return sa.depth < sb.depth;  // deeper first
    const int d = std::min(sa.depth, sb.depth);
    for (int i = 0; i < d; ++i) {
      const int ka = lex_key(sa.assign[i], n2), kb = lex_key(sb.assign[i], n2);
      if (ka != kb) return ka > kb;                // lexicographically smaller first
    }
    return a > b;
  };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)> open(cmp);

  AStarState root;
  root.assign.fill(-1);
  root.f = heuristic(0, 0, 0);
  states.push_back(root);
  open.push(0);

  ExactGedResult result;
  while (!open.empty()) {
    const std::size_t idx = open.top();
    open.pop();
    const AStarState cur = states[idx];  // copy; deque may grow below
    if (++result.expansions > budget) {
      result.solved = false;
      return result;
    }
    if (cur.depth == n1) {
      result.solved = true;
      result.ged = cur.g;
      // Reconstruct the edit path from the complete assignment.
      std::vector<int> assign(cur.assign.begin(), cur.assign.begin() + n1);
      EditPath& path = result.path;
      std::vector<int> inv(n2, -1);
      for (int u = 0; u < n1; ++u)
        if (assign[u] >= 0) inv[assign[u]] = u;
      for (auto [u, v] : g1.edges) {
        const bool kept = assign[u] >= 0 && assign[v] >= 0 && adj2[assign[u]][assign[v]];
        if (!kept)
          path.operations.push_back({EditOp::Kind::DeleteEdge, -1, -1, u, v});
      }
      for (int u = 0; u < n1; ++u) {
        if (assign[u] < 0) {
          path.operations.push_back({EditOp::Kind::DeleteNode, u, -1, -1, -1});
        } else if (g1.node_labels[u] != g2.node_labels[assign[u]]) {
          path.operations.push_back(
              {EditOp::Kind::SubstituteNode, u, g2.node_labels[assign[u]], -1, -1});
        }
      }
      std::vector<int> handle(n2, -1);
      int next_handle = n1;
      for (int w = 0; w < n2; ++w) {
        if (inv[w] >= 0) {
          handle[w] = inv[w];
        } else {
          handle[w] = next_handle++;
          path.operations.push_back({EditOp::Kind::InsertNode, handle[w], g2.node_labels[w], -1, -1});
        }
      }
      for (auto [w1, w2] : g2.edges) {
        const bool already = inv[w1] >= 0 && inv[w2] >= 0 && adj1[inv[w1]][inv[w2]];
        if (!already) {
          int hu = handle[w1], hv = handle[w2];
          if (hu > hv) std::swap(hu, hv);
          path.operations.push_back({EditOp::Kind::InsertEdge, -1, -1, hu, hv});
        }
      }
      path.total_cost = static_cast<int>(path.operations.size());
      return result;
    }

    const int k = cur.depth;
    const int used_count = std::popcount(cur.used);
    // Children: map g1 node k to each unused g2 node (ascending), then delete.
    for (int v = 0; v <= n2; ++v) {
      const bool del = v == n2;
      if (!del && (cur.used >> v & 1)) continue;
      int delta = 0;
      if (del) {
        delta += 1;
      } else if (labels.l1[k] != labels.l2[v]) {
        delta += 1;
      }
      for (int u2 = 0; u2 < k; ++u2) {
        const bool e1 = adj1[k][u2];
        const int m = cur.assign[u2];
        const bool e2 = !del && m >= 0 && adj2[v][m];
        if (e1 != e2) ++delta;
      }
      AStarState child = cur;
      child.depth = static_cast<std::int8_t>(k + 1);
      child.assign[k] = del ? -1 : static_cast<std::int8_t>(v);
      child.used = del ? cur.used : (cur.used | (1u << v));
      child.g = cur.g + delta;
      if (child.depth == n1) {
        // Completion: insert every unused g2 node and every g2 edge not
        // already matched between two used nodes.
        const int uc = used_count + (del ? 0 : 1);
        child.g += (n2 - uc) + (e2_total - edges_both_used(child.used));
        child.f = child.g;
      } else {
        child.f = child.g + heuristic(child.depth, child.used,
                                      used_count + (del ? 0 : 1));
      }
      states.push_back(child);
      open.push(states.size() - 1);
    }
  }
  result.solved = false;  // unreachable for nonempty graphs
  return result;
}

int brute_force_ged(const Graph& g1, const Graph& g2) {
  const int n1 = g1.num_nodes(), n2 = g2.num_nodes();
  const int n = std::max(n1, n2);
  if (n > 6) throw std::invalid_argument("brute_force_ged: graphs larger than 6 nodes");
  if (n == 0) return 0;

  // Pad both to n dummy-extended node sets; dummies carry no label, no edges.
  constexpr int kDummy = -999;
  std::vector<int> l1(n, kDummy), l2(n, kDummy);
  for (int i = 0; i < n1; ++i) l1[i] = g1.node_labels[i];
  for (int i = 0; i < n2; ++i) l2[i] = g2.node_labels[i];
  const auto adj1 = adjacency_bool(g1);
  const auto adj2 = adjacency_bool(g2);
  auto a1 = [&](int u, int v) { return u < n1 && v < n1 && adj1[u][v]; };
  auto a2 = [&](int u, int v) { return u < n2 && v < n2 && adj2[u][v]; };

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  int best = std::numeric_limits<int>::max();
  do {
    int cost = 0;
    for (int i = 0; i < n; ++i) {
      const int a = l1[i], b = l2[perm[i]];
      if (a == kDummy && b == kDummy) continue;
      if (a == kDummy || b == kDummy) cost += 1;      // insertion / deletion
      else if (a != b) cost += 1;                     // substitution
    }
    for (int i = 0; i < n && cost < best; ++i)
      for (int j = i + 1; j < n; ++j)
        if (a1(i, j) != a2(perm[i], perm[j])) ++cost;  // symmetric edge difference
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool label_isomorphic(const Graph& a, const Graph& b) {
  const int n = a.num_nodes();
  if (n != b.num_nodes() || a.num_edges() != b.num_edges()) return false;
  auto sorted_labels = [](const Graph& g) {
    auto l = g.node_labels;
    std::sort(l.begin(), l.end());
    return l;
  };
  if (sorted_labels(a) != sorted_labels(b)) return false;
  if (n > 10) throw std::invalid_argument("label_isomorphic: graphs larger than 10 nodes");

  const auto adj_a = adjacency_bool(a);
  const auto adj_b = adjacency_bool(b);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      ok = a.node_labels[i] == b.node_labels[perm[i]];
    for (int i = 0; i < n && ok; ++i)
      for (int j = i + 1; j < n && ok; ++j)
        ok = adj_a[i][j] == adj_b[perm[i]][perm[j]];
    if (ok) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

Graph apply_edit_path(const Graph& g1, const EditPath& path) {
  const int n1 = g1.num_nodes();
  std::vector<int> labels = g1.node_labels;
  std::vector<char> alive(n1, 1);
  std::set<std::pair<int, int>> edges(g1.edges.begin(), g1.edges.end());

  auto check_handle = [&](int h, const char* what) {
    if (h < 0 || h >= static_cast<int>(labels.size()) || !alive[h])
      throw std::runtime_error(std::string("apply_edit_path: ") + what + " references dead handle " +
                               std::to_string(h));
  };

  for (const auto& op : path.operations) {
    switch (op.kind) {
      case EditOp::Kind::DeleteEdge: {
        check_handle(op.u, "delete-edge");
        check_handle(op.v, "delete-edge");
        auto key = std::minmax(op.u, op.v);
        if (!edges.erase({key.first, key.second}))
          throw std::runtime_error("apply_edit_path: delete-edge on missing edge");
        break;
      }
      case EditOp::Kind::DeleteNode: {
        check_handle(op.node, "delete-node");
        for (const auto& [u, v] : edges)
          if (u == op.node || v == op.node)
            throw std::runtime_error("apply_edit_path: delete-node with live incident edge");
        alive[op.node] = 0;
        break;
      }
      case EditOp::Kind::SubstituteNode:
        check_handle(op.node, "substitute-node");
        labels[op.node] = op.label;
        break;
      case EditOp::Kind::InsertNode:
        if (op.node != static_cast<int>(labels.size()))
          throw std::runtime_error("apply_edit_path: insert-node handle out of order");
        labels.push_back(op.label);
        alive.push_back(1);
        break;
      case EditOp::Kind::InsertEdge: {
        check_handle(op.u, "insert-edge");
        check_handle(op.v, "insert-edge");
        auto key = std::minmax(op.u, op.v);
        if (!edges.insert({key.first, key.second}).second)
          throw std::runtime_error("apply_edit_path: insert-edge on existing edge");
        break;
      }
    }
  }

  // Compact live handles into a fresh graph.
  std::vector<int> remap(labels.size(), -1);
  Graph out;
  out.id = g1.id + "+edits";
  for (std::size_t h = 0; h < labels.size(); ++h) {
    if (alive[h]) {
      remap[h] = out.num_nodes();
      out.node_labels.push_back(labels[h]);
    }
  }
  for (const auto& [u, v] : edges) {
    const int ru = remap[u], rv = remap[v];
    out.edges.emplace_back(std::min(ru, rv), std::max(ru, rv));
  }
  out.canonicalize();
  return out;
}

}  // namespace gna
