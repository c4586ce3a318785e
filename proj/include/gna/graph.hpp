#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gna {

/// Undirected, unlabeled-edge graph with optional categorical node labels.
/// Label id -1 means unlabeled. Edges are stored once with u < v; no
/// self-loops or duplicates. validate() enforces the invariants.
struct Graph {
  std::string id;
  std::vector<int> node_labels;               // length n; -1 = unlabeled
  std::vector<std::pair<int, int>> edges;     // u < v, sorted, unique

  int num_nodes() const { return static_cast<int>(node_labels.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  /// Throws std::invalid_argument on any invariant violation.
  void validate() const;

  /// Sorts edge endpoints (u < v) and the edge list; throws on duplicates.
  void canonicalize();

  std::vector<std::vector<int>> adjacency_lists() const;
  std::vector<std::vector<double>> adjacency_matrix() const;
  bool has_edge(int u, int v) const;
};

/// Ordered graph pair (|V1| <= |V2|) with exact GED and the normalized
/// ground-truth score ged / (max(|V1|,|V2|) + max(|E1|,|E2|)).
struct GraphPair {
  Graph g1;
  Graph g2;
  int ged = 0;
  double gt_score = 0.0;

  /// Swaps the graphs if needed so |V1| <= |V2| and computes gt_score.
  /// Throws if ged < 0 or the resulting score leaves [0, 1].
  static GraphPair make(Graph a, Graph b, int ged);
};

double normalize_ged(int ged, const Graph& g1, const Graph& g2);
double denormalize_score(double score, const Graph& g1, const Graph& g2);

struct SplitRatios {
  double train = 0.6;
  double validation = 0.2;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<GraphPair> train;
  std::vector<GraphPair> validation;
  std::vector<GraphPair> test;
  SplitRatios ratios;
};

// ---- file I/O ---------------------------------------------------------------
// Graph file: line-delimited JSON, one object per line:
//   {"id": str, "labels": [int,...], "edges": [[u,v],...]}
// Pair file: line-delimited JSON: {"g1": str, "g2": str, "ged": int};
// gt_score is recomputed on load, never stored.

std::vector<Graph> load_graphs(const std::string& path);
void save_graphs(const std::string& path, const std::vector<Graph>& graphs);

struct PairRecord {
  std::string g1;
  std::string g2;
  int ged = -1;  // -1 = unlabeled record
};

std::vector<PairRecord> load_pair_records(const std::string& path);
void save_pair_records(const std::string& path, const std::vector<PairRecord>& records);

/// Resolves pair records against a graph list (by id) into GraphPairs.
/// Records must carry a non-negative ged. Unknown ids raise.
std::vector<GraphPair> resolve_pairs(const std::vector<PairRecord>& records,
                                     const std::vector<Graph>& graphs);

// ---- synthetic generation ----------------------------------------------------

struct SyntheticConfig {
  int count = 0;
  int n_min = 1;
  int n_max = 1;
  double edge_density = 0.5;
  int label_count = 0;  // 0 = unlabeled graphs (all labels -1)
  std::uint64_t seed = 0;
};

/// Connected random graphs: random spanning tree plus extra edges up to the
/// density target. Reproducible under a fixed seed.
std::vector<Graph> generate_synthetic(const SyntheticConfig& cfg);

/// Exact-GED callback: returns the ged, or nullopt when the pair is unsolved
/// within the caller's budget.
using GedOracle = std::function<std::optional<int>(const Graph&, const Graph&)>;

struct BuildPairsResult {
  std::vector<GraphPair> pairs;
  int skipped_unsolved = 0;
  int skipped_invalid = 0;  // gt_score outside [0,1] (pair rejected, counted)
};

/// Samples up to max_pairs ordered pairs without replacement from the
/// |graphs|^2 cross product (self-pairs allowed), labels them via the oracle,
/// and orders each pair so |V1| <= |V2|. Pairs the oracle cannot solve are
/// skipped and counted. threads > 1 parallelizes oracle calls; output order
/// and content are independent of the thread count.
BuildPairsResult build_pairs(const std::vector<Graph>& graphs, const GedOracle& oracle,
                             int max_pairs, std::uint64_t seed, int threads = 1);

/// Disjoint shuffled split, reproducible under seed. Ratios must sum to 1.
DatasetSplit split_dataset(std::vector<GraphPair> pairs, const SplitRatios& ratios,
                           std::uint64_t seed);

}  // namespace gna
