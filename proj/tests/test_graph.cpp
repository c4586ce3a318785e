#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>

#include "gna/exact_ged.hpp"
#include "gna/graph.hpp"

using namespace gna;

namespace {

Graph make_graph(std::string id, std::vector<int> labels, std::vector<std::pair<int, int>> edges) {
  Graph g;
  g.id = std::move(id);
  g.node_labels = std::move(labels);
  g.edges = std::move(edges);
  g.canonicalize();
  g.validate();
  return g;
}

bool connected(const Graph& g) {
  const auto adj = g.adjacency_lists();
  std::vector<bool> seen(g.num_nodes(), false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
  }
  return count == g.num_nodes();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("graph invariants are enforced") {
  CHECK_THROWS_AS(make_graph("bad", {0, 0}, {{0, 0}}), std::invalid_argument);   // self loop
  CHECK_THROWS_AS(make_graph("bad", {0, 0, 0}, {{0, 5}}), std::invalid_argument);  // range
  CHECK_THROWS_AS(make_graph("bad", {0, 0}, {{0, 1}, {1, 0}}), std::invalid_argument);  // dup
  Graph g = make_graph("ok", {0, 1}, {{1, 0}});
  CHECK(g.edges[0] == std::pair<int, int>{0, 1});
}

TEST_CASE("load_graphs parses records and reports bad lines") {
  const std::string path = temp_path("gna_test_graphs_parse.jsonl");
  {
    std::ofstream out(path);
    out << R"({"id":"g0","labels":[0,0],"edges":[[0,1]]})" << "\n";
  }
  auto graphs = load_graphs(path);
  REQUIRE(graphs.size() == 1);
  CHECK(graphs[0].num_nodes() == 2);
  CHECK(graphs[0].num_edges() == 1);

  SUBCASE("out-of-range edge fails validation") {
    std::ofstream out(path);
    out << R"({"id":"g0","labels":[0,0,0],"edges":[[0,5]]})" << "\n";
    out.close();
    CHECK_THROWS_AS(load_graphs(path), std::runtime_error);
  }
  SUBCASE("malformed json names the line") {
    std::ofstream out(path);
    out << R"({"id":"g0","labels":[0],"edges":[]})" << "\n" << "{nope\n";
    out.close();
    try {
      load_graphs(path);
      FAIL("expected a parse error");
    } catch (const std::exception& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("empty file gives empty list") {
    std::ofstream out(path);
    out.close();
    CHECK(load_graphs(path).empty());
  }
}

TEST_CASE("graph file round-trip is byte identical") {
  std::vector<Graph> graphs{make_graph("a", {0, 1, 2}, {{0, 1}, {1, 2}}),
                            make_graph("b", {-1, -1}, {{0, 1}})};
  const std::string p1 = temp_path("gna_test_rt1.jsonl");
  const std::string p2 = temp_path("gna_test_rt2.jsonl");
  save_graphs(p1, graphs);
  save_graphs(p2, load_graphs(p1));
  CHECK(read_file(p1) == read_file(p2));
  CHECK_FALSE(read_file(p1).empty());
}

TEST_CASE("normalize_ged follows the linear rule") {
  Graph g8 = make_graph("g8", std::vector<int>(8, 0),
                        {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {0, 7}});
  Graph small = make_graph("s", {0, 0}, {{0, 1}});
  CHECK(normalize_ged(4, g8, small) == doctest::Approx(4.0 / (8 + 8)));
  CHECK(normalize_ged(0, g8, small) == 0.0);
  CHECK(normalize_ged(16, g8, small) == doctest::Approx(1.0));
  CHECK(denormalize_score(0.25, g8, small) == doctest::Approx(4.0));
}

TEST_CASE("pair construction orders by size and bounds the score") {
  Graph big = make_graph("big", {0, 0, 0}, {{0, 1}, {1, 2}});
  Graph small = make_graph("small", {0}, {});
  GraphPair p = GraphPair::make(big, small, 3);
  CHECK(p.g1.id == "small");
  CHECK(p.g2.id == "big");
  CHECK(p.gt_score == doctest::Approx(3.0 / (3 + 2)));

  CHECK_THROWS_AS(GraphPair::make(small, small, 5), std::invalid_argument);  // score > 1
  CHECK_THROWS_AS(GraphPair::make(small, big, -1), std::invalid_argument);
}

TEST_CASE("synthetic generation is deterministic, connected and in range") {
  SyntheticConfig cfg;
  cfg.count = 60;
  cfg.n_min = 2;
  cfg.n_max = 10;
  cfg.edge_density = 0.5;
  cfg.label_count = 3;
  cfg.seed = 42;
  auto a = generate_synthetic(cfg);
  auto b = generate_synthetic(cfg);
  REQUIRE(a.size() == 60);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].num_nodes() >= 2);
    CHECK(a[i].num_nodes() <= 10);
    CHECK(connected(a[i]));
    for (int l : a[i].node_labels) {
      CHECK(l >= 0);
      CHECK(l < 3);
    }
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].node_labels == b[i].node_labels);
    CHECK(a[i].edges == b[i].edges);
  }
}

TEST_CASE("synthetic density 1 yields the clique; label_count 0 means unlabeled") {
  SyntheticConfig cfg;
  cfg.count = 1;
  cfg.n_min = 4;
  cfg.n_max = 4;
  cfg.edge_density = 1.0;
  cfg.seed = 7;
  auto g = generate_synthetic(cfg);
  REQUIRE(g.size() == 1);
  CHECK(g[0].num_edges() == 6);
  for (int l : g[0].node_labels) CHECK(l == -1);
}

TEST_CASE("build_pairs labels pairs through the oracle") {
  Graph single = make_graph("single", {0}, {});
  Graph path2 = make_graph("path2", {0, 0}, {{0, 1}});
  std::vector<Graph> graphs{single, path2};

  GedOracle oracle = [](const Graph& a, const Graph& b) { return brute_force_ged(a, b); };
  BuildPairsResult res = build_pairs(graphs, oracle, 4, 1);
  REQUIRE(res.pairs.size() == 4);
  CHECK(res.skipped_unsolved == 0);

  for (const auto& p : res.pairs) {
    CHECK(p.g1.num_nodes() <= p.g2.num_nodes());
    CHECK(p.gt_score >= 0.0);
    CHECK(p.gt_score <= 1.0);
    if (p.g1.id == p.g2.id) CHECK(p.ged == 0);
    if (p.g1.id == "single" && p.g2.id == "path2") {
      CHECK(p.ged == 2);
      CHECK(p.gt_score == doctest::Approx(2.0 / 3.0));
    }
  }
}

TEST_CASE("build_pairs output is independent of thread count and counts skips") {
  SyntheticConfig cfg;
  cfg.count = 12;
  cfg.n_min = 2;
  cfg.n_max = 5;
  cfg.edge_density = 0.6;
  cfg.label_count = 2;
  cfg.seed = 3;
  auto graphs = generate_synthetic(cfg);

  GedOracle oracle = [](const Graph& a, const Graph& b) { return brute_force_ged(a, b); };
  auto r1 = build_pairs(graphs, oracle, 30, 9, 1);
  auto r4 = build_pairs(graphs, oracle, 30, 9, 4);
  REQUIRE(r1.pairs.size() == r4.pairs.size());
  for (std::size_t i = 0; i < r1.pairs.size(); ++i) {
    CHECK(r1.pairs[i].g1.id == r4.pairs[i].g1.id);
    CHECK(r1.pairs[i].g2.id == r4.pairs[i].g2.id);
    CHECK(r1.pairs[i].ged == r4.pairs[i].ged);
  }

  GedOracle flaky = [](const Graph& a, const Graph& b) -> std::optional<int> {
    if (a.num_nodes() + b.num_nodes() >= 8) return std::nullopt;
    return brute_force_ged(a, b);
  };
  auto rs = build_pairs(graphs, flaky, 30, 9, 2);
  CHECK(rs.pairs.size() + rs.skipped_unsolved + rs.skipped_invalid == 30);
  CHECK(rs.skipped_unsolved > 0);
}

TEST_CASE("pair records round-trip and resolve against graphs") {
  Graph a = make_graph("a", {0, 1}, {{0, 1}});
  Graph b = make_graph("b", {0}, {});
  const std::string path = temp_path("gna_test_pairs.jsonl");
  save_pair_records(path, {{"a", "b", 2}, {"a", "a", 0}});
  auto records = load_pair_records(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].g1 == "a");
  CHECK(records[0].ged == 2);

  auto pairs = resolve_pairs(records, {a, b});
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].g1.id == "b");  // reordered by size
  CHECK(pairs[0].ged == 2);

  CHECK_THROWS_AS(resolve_pairs({{"a", "zz", 1}}, {a, b}), std::runtime_error);
  CHECK_THROWS_AS(resolve_pairs({{"a", "b", -1}}, {a, b}), std::runtime_error);
}

TEST_CASE("split_dataset sizes, disjointness and determinism") {
  std::vector<GraphPair> pairs;
  for (int i = 0; i < 10; ++i) {
    Graph g = make_graph("g" + std::to_string(i), {0, 0}, {{0, 1}});
    pairs.push_back(GraphPair::make(g, g, 0));
  }
  SplitRatios ratios;  // 6:2:2
  DatasetSplit s1 = split_dataset(pairs, ratios, 5);
  DatasetSplit s2 = split_dataset(pairs, ratios, 5);
  CHECK(s1.train.size() == 6);
  CHECK(s1.validation.size() == 2);
  CHECK(s1.test.size() == 2);
  CHECK(s1.train[0].g1.id == s2.train[0].g1.id);
  CHECK(s1.test[1].g1.id == s2.test[1].g1.id);

  std::size_t total = s1.train.size() + s1.validation.size() + s1.test.size();
  CHECK(total == pairs.size());

  SplitRatios bad{0.5, 0.5, 0.5};
  CHECK_THROWS_AS(split_dataset(pairs, bad, 5), std::invalid_argument);
}
