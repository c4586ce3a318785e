#include "gna/graph.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace gna {

using nlohmann::json;

void Graph::validate() const {
  const int n = num_nodes();
  std::set<std::pair<int, int>> seen;
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw std::invalid_argument("graph '" + id + "': edge endpoint out of range [0, " +
                                  std::to_string(n) + ")");
    }
    if (u == v) throw std::invalid_argument("graph '" + id + "': self-loop at node " + std::to_string(u));
    if (u > v) throw std::invalid_argument("graph '" + id + "': edge stored with u > v");
    if (!seen.insert({u, v}).second)
      throw std::invalid_argument("graph '" + id + "': duplicate edge (" + std::to_string(u) +
                                  "," + std::to_string(v) + ")");
  }
  for (int l : node_labels) {
    if (l < -1) throw std::invalid_argument("graph '" + id + "': label id below -1");
  }
}

void Graph::canonicalize() {
  for (auto& [u, v] : edges) {
    if (u > v) std::swap(u, v);
  }
  std::sort(edges.begin(), edges.end());
  validate();
}

std::vector<std::vector<int>> Graph::adjacency_lists() const {
  std::vector<std::vector<int>> adj(num_nodes());
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  return adj;
}

std::vector<std::vector<double>> Graph::adjacency_matrix() const {
  std::vector<std::vector<double>> a(num_nodes(), std::vector<double>(num_nodes(), 0.0));
  for (const auto& [u, v] : edges) {
    a[u][v] = 1.0;
    a[v][u] = 1.0;
  }
  return a;
}

bool Graph::has_edge(int u, int v) const {
  if (u > v) std::swap(u, v);
  return std::binary_search(edges.begin(), edges.end(), std::make_pair(u, v));
}

double normalize_ged(int ged, const Graph& g1, const Graph& g2) {
  if (ged < 0) throw std::invalid_argument("normalize_ged: negative ged");
  const int denom = std::max(g1.num_nodes(), g2.num_nodes()) + std::max(g1.num_edges(), g2.num_edges());
  if (denom <= 0) throw std::invalid_argument("normalize_ged: both graphs empty, undefined denominator");
  return static_cast<double>(ged) / denom;
}

double denormalize_score(double score, const Graph& g1, const Graph& g2) {
  const int denom = std::max(g1.num_nodes(), g2.num_nodes()) + std::max(g1.num_edges(), g2.num_edges());
  return score * denom;
}

GraphPair GraphPair::make(Graph a, Graph b, int ged) {
  GraphPair p;
  if (a.num_nodes() <= b.num_nodes()) {
    p.g1 = std::move(a);
    p.g2 = std::move(b);
  } else {
    p.g1 = std::move(b);
    p.g2 = std::move(a);
  }
  p.ged = ged;
  p.gt_score = normalize_ged(ged, p.g1, p.g2);
  if (p.gt_score > 1.0) {
    throw std::invalid_argument("GraphPair(" + p.g1.id + "," + p.g2.id +
                                "): gt_score above 1 (ged " + std::to_string(ged) + ")");
  }
  return p;
}

namespace {

json graph_to_json(const Graph& g) {
  json rec;
  rec["id"] = g.id;
  rec["labels"] = g.node_labels;
  json edges = json::array();
  for (const auto& [u, v] : g.edges) edges.push_back({u, v});
  rec["edges"] = std::move(edges);
  return rec;
}

Graph graph_from_json(const json& rec, int line_no) {
  auto fail = [&](const std::string& what) -> void {
    throw std::runtime_error("graph file line " + std::to_string(line_no) + ": " + what);
  };
  if (!rec.is_object()) fail("record is not a JSON object");
  if (!rec.contains("id") || !rec["id"].is_string()) fail("missing string field 'id'");
  if (!rec.contains("labels") || !rec["labels"].is_array()) fail("missing array field 'labels'");
  if (!rec.contains("edges") || !rec["edges"].is_array()) fail("missing array field 'edges'");
  Graph g;
  g.id = rec["id"].get<std::string>();
  for (const auto& l : rec["labels"]) {
    if (!l.is_number_integer()) fail("non-integer label");
    g.node_labels.push_back(l.get<int>());
  }
  for (const auto& e : rec["edges"]) {
    if (!e.is_array() || e.size() != 2) fail("edge is not a [u,v] pair");
    g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  try {
    g.canonicalize();
  } catch (const std::invalid_argument& ex) {
    throw std::runtime_error("graph file line " + std::to_string(line_no) + ": " + ex.what());
  }
  return g;
}

}  // namespace

std::vector<Graph> load_graphs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  std::vector<Graph> graphs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw std::runtime_error("graph file line " + std::to_string(line_no) +
                               ": malformed JSON: " + ex.what());
    }
    graphs.push_back(graph_from_json(rec, line_no));
  }
  return graphs;
}

void save_graphs(const std::string& path, const std::vector<Graph>& graphs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  for (const auto& g : graphs) out << graph_to_json(g).dump() << "\n";
}

std::vector<PairRecord> load_pair_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pair file: " + path);
  std::vector<PairRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw std::runtime_error("pair file line " + std::to_string(line_no) +
                               ": malformed JSON: " + ex.what());
    }
    if (!rec.contains("g1") || !rec.contains("g2"))
      throw std::runtime_error("pair file line " + std::to_string(line_no) + ": missing g1/g2");
    PairRecord p;
    p.g1 = rec["g1"].get<std::string>();
    p.g2 = rec["g2"].get<std::string>();
    if (rec.contains("ged")) p.ged = rec["ged"].get<int>();
    records.push_back(std::move(p));
  }
  return records;
}

void save_pair_records(const std::string& path, const std::vector<PairRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pair file: " + path);
  for (const auto& r : records) {
    json rec;
    rec["g1"] = r.g1;
    rec["g2"] = r.g2;
    rec["ged"] = r.ged;
    out << rec.dump() << "\n";
  }
}

std::vector<GraphPair> resolve_pairs(const std::vector<PairRecord>& records,
                                     const std::vector<Graph>& graphs) {
  std::unordered_map<std::string, const Graph*> by_id;
  for (const auto& g : graphs) by_id[g.id] = &g;
  std::vector<GraphPair> pairs;
  pairs.reserve(records.size());
  for (const auto& r : records) {
    auto i1 = by_id.find(r.g1);
    auto i2 = by_id.find(r.g2);
    if (i1 == by_id.end() || i2 == by_id.end())
      throw std::runtime_error("pair references unknown graph id: " + r.g1 + " / " + r.g2);
    if (r.ged < 0) throw std::runtime_error("pair (" + r.g1 + "," + r.g2 + ") has no ged label");
    pairs.push_back(GraphPair::make(*i1->second, *i2->second, r.ged));
  }
  return pairs;
}

std::vector<Graph> generate_synthetic(const SyntheticConfig& cfg) {
  if (cfg.n_min < 1 || cfg.n_min > cfg.n_max)
    throw std::invalid_argument("generate_synthetic: need 1 <= n_min <= n_max");
  if (cfg.edge_density <= 0.0 || cfg.edge_density > 1.0)
    throw std::invalid_argument("generate_synthetic: edge_density must be in (0, 1]");

  std::mt19937_64 rng(cfg.seed);
  std::vector<Graph> graphs;
  graphs.reserve(cfg.count);
  constexpr int kMaxRetries = 100;

  for (int gi = 0; gi < cfg.count; ++gi) {
    int n = 0, target_edges = 0;
    bool feasible = false;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
      n = static_cast<int>(std::uniform_int_distribution<int>(cfg.n_min, cfg.n_max)(rng));
      const long long max_e = static_cast<long long>(n) * (n - 1) / 2;
      target_edges = static_cast<int>(std::llround(cfg.edge_density * max_e));
      if (n == 1 || target_edges >= n - 1) {
        feasible = true;
        break;
      }
    }
    if (!feasible) {
      throw std::runtime_error(
          "generate_synthetic: edge density too low to connect graphs in the requested size range");
    }

    Graph g;
    g.id = "g" + std::to_string(gi);
    g.node_labels.resize(n);
    for (int i = 0; i < n; ++i) {
      g.node_labels[i] = cfg.label_count > 0
                             ? std::uniform_int_distribution<int>(0, cfg.label_count - 1)(rng)
                             : -1;
    }
    // Random spanning tree: attach each node (in shuffled order) to a random
    // earlier one, then top up with uniformly drawn extra edges.
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::set<std::pair<int, int>> edge_set;
    for (int i = 1; i < n; ++i) {
      const int j = order[std::uniform_int_distribution<int>(0, i - 1)(rng)];
      const int u = std::min(order[i], j), v = std::max(order[i], j);
      edge_set.insert({u, v});
    }
    while (static_cast<int>(edge_set.size()) < target_edges) {
      const int u = std::uniform_int_distribution<int>(0, n - 1)(rng);
      const int v = std::uniform_int_distribution<int>(0, n - 1)(rng);
      if (u != v) edge_set.insert({std::min(u, v), std::max(u, v)});
    }
    g.edges.assign(edge_set.begin(), edge_set.end());
    g.validate();
    graphs.push_back(std::move(g));
  }
  return graphs;
}

BuildPairsResult build_pairs(const std::vector<Graph>& graphs, const GedOracle& oracle,
                             int max_pairs, std::uint64_t seed, int threads) {
  const long long n = static_cast<long long>(graphs.size());
  if (n == 0) throw std::invalid_argument("build_pairs: no graphs");
  const long long total = n * n;
  const long long want = std::min<long long>(max_pairs, total);

  // Partial Fisher-Yates over the n^2 cross-product index space.
  std::mt19937_64 rng(seed);
  std::unordered_map<long long, long long> moved;
  std::vector<long long> chosen;
  chosen.reserve(want);
  for (long long i = 0; i < want; ++i) {
    const long long j = i + static_cast<long long>(rng() % static_cast<std::uint64_t>(total - i));
    auto ji = moved.find(j);
    const long long pick = ji == moved.end() ? j : ji->second;
    auto ii = moved.find(i);
    moved[j] = ii == moved.end() ? i : ii->second;
    chosen.push_back(pick);
  }

  struct Slot {
    std::optional<GraphPair> pair;
    bool invalid = false;
  };
  std::vector<Slot> slots(chosen.size());

  auto work = [&](long long idx) {
    const auto& a = graphs[static_cast<std::size_t>(chosen[idx] / n)];
    const auto& b = graphs[static_cast<std::size_t>(chosen[idx] % n)];
    const Graph& g1 = a.num_nodes() <= b.num_nodes() ? a : b;
    const Graph& g2 = a.num_nodes() <= b.num_nodes() ? b : a;
    auto ged = oracle(g1, g2);
    if (!ged) return;
    try {
      slots[idx].pair = GraphPair::make(g1, g2, *ged);
    } catch (const std::invalid_argument&) {
      slots[idx].invalid = true;
    }
  };

  if (threads <= 1) {
    for (long long i = 0; i < static_cast<long long>(chosen.size()); ++i) work(i);
  } else {
    std::atomic<long long> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const long long i = next.fetch_add(1);
          if (i >= static_cast<long long>(chosen.size())) break;
          work(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  BuildPairsResult result;
  for (auto& s : slots) {
    if (s.pair) {
      result.pairs.push_back(std::move(*s.pair));
    } else if (s.invalid) {
      ++result.skipped_invalid;
    } else {
      ++result.skipped_unsolved;
    }
  }
  return result;
}

DatasetSplit split_dataset(std::vector<GraphPair> pairs, const SplitRatios& ratios,
                           std::uint64_t seed) {
  const double total = ratios.train + ratios.validation + ratios.test;
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split_dataset: ratios must sum to 1");
  if (pairs.size() < 3) throw std::invalid_argument("split_dataset: fewer pairs than splits");

  std::mt19937_64 rng(seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);

  const std::size_t n = pairs.size();
  const std::size_t n_train = static_cast<std::size_t>(ratios.train * n + 0.5);
  const std::size_t n_val = static_cast<std::size_t>(ratios.validation * n + 0.5);

  DatasetSplit split;
  split.ratios = ratios;
  split.train.assign(pairs.begin(), pairs.begin() + n_train);
  split.validation.assign(pairs.begin() + n_train, pairs.begin() + std::min(n, n_train + n_val));
  split.test.assign(pairs.begin() + std::min(n, n_train + n_val), pairs.end());
  return split;
}

}  // namespace gna
