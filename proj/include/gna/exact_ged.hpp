#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gna/graph.hpp"

namespace gna {

/// One unit-cost edit operation. Node references use stable handles: original
/// g1 indices for existing nodes, and n1, n1+1, ... for inserted nodes in
/// insertion order. Edge operations reference the same handles.
struct EditOp {
  enum class Kind { InsertNode, DeleteNode, SubstituteNode, InsertEdge, DeleteEdge };
  Kind kind;
  int node = -1;   // DeleteNode/SubstituteNode target; InsertNode handle
  int label = -1;  // InsertNode label; SubstituteNode new label
  int u = -1;      // edge endpoints (handles)
  int v = -1;
};

struct EditPath {
  std::vector<EditOp> operations;
  int total_cost = 0;
};

struct ExactGedResult {
  bool solved = false;
  int ged = -1;
  EditPath path;
  long long expansions = 0;
};

inline constexpr long long kDefaultGedBudget = 2'000'000;

/// Exact minimum unit-cost edit distance by A* over partial node assignments
/// (g1 nodes taken in index order, each mapped to an unused g2 node or
/// deleted). Admissible heuristic: remaining label-multiset mismatch plus
/// remaining edge-count difference. Exceeding the node-expansion budget yields
/// an explicit unsolved result, never a wrong number.
ExactGedResult exact_ged(const Graph& g1, const Graph& g2,
                         long long budget = kDefaultGedBudget);

/// Independent oracle: minimum over all bijections between the two node sets
/// after padding the smaller graph with dummy nodes. Only for max size <= 6.
int brute_force_ged(const Graph& g1, const Graph& g2);

/// Label-preserving isomorphism test by bijection enumeration (small graphs).
bool label_isomorphic(const Graph& a, const Graph& b);

/// Replays an edit path on g1. Throws if an operation is inconsistent (e.g.
/// deleting a node that still has live edges, or referencing a dead handle).
Graph apply_edit_path(const Graph& g1, const EditPath& path);

}  // namespace gna
