#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "gna/exact_ged.hpp"
#include "gna/trainer.hpp"

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

GnaModel zero_model() {
  ModelConfig cfg;
  cfg.label_vocab = 2;
  cfg.gin_dims = {4, 6, 8};
  cfg.cost_layers = 2;
  cfg.ntn_slices = 2;
  GnaModel model(cfg, 1);
  for (const auto& p : model.parameters())
    model.set_param_values(p.name(), std::vector<double>(p.size(), 0.0));
  return model;  // predicts exactly 0.5 for every pair
}

/// gt_score = ged / 4 for two 3-node, 2-edge graphs.
GraphPair pair_with_score(const std::string& tag, int ged) {
  Graph a = make_graph("a" + tag, {0, 0, 1}, {{0, 1}, {1, 2}});
  Graph b = make_graph("b" + tag, {0, 1, 1}, {{0, 1}, {0, 2}});
  return GraphPair::make(a, b, ged);  // denominator 3 + 2 = 5
}

std::vector<GraphPair> mini_dataset(int graph_count, std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.count = graph_count;
  cfg.n_min = 3;
  cfg.n_max = 5;
  cfg.edge_density = 0.5;
  cfg.label_count = 2;
  cfg.seed = seed;
  auto graphs = generate_synthetic(cfg);
  GedOracle oracle = [](const Graph& x, const Graph& y) { return brute_force_ged(x, y); };
  return build_pairs(graphs, oracle, graph_count * 3, seed + 1).pairs;
}

}  // namespace

TEST_CASE("evaluate_loss matches hand-computed MSE") {
  GnaModel model = zero_model();

  SUBCASE("perfect prediction gives zero loss") {
    Graph a = make_graph("pa", {0, 0, 0}, {{0, 1}});
    Graph b = make_graph("pb", {0, 1, 0}, {{1, 2}});
    GraphPair half = GraphPair::make(a, b, 2);  // denominator 3 + 1, gt 0.5
    CHECK(evaluate_loss(model, {half}) == doctest::Approx(0.0));
  }
  SUBCASE("constant 0.5 on balanced {0,1} scores gives 0.25") {
    GraphPair zero = pair_with_score("z", 0);
    GraphPair one = pair_with_score("o", 5);
    CHECK(evaluate_loss(model, {zero, one}) == doctest::Approx(0.25));
  }
  SUBCASE("three fixed pairs average as computed by hand") {
    Graph a = make_graph("ha", {0, 0, 0}, {{0, 1}});
    Graph b = make_graph("hb", {0, 1, 0}, {{1, 2}});
    GraphPair half = GraphPair::make(a, b, 2);  // gt 0.5
    GraphPair zero = pair_with_score("z", 0);
    GraphPair one = pair_with_score("o", 5);
    // ((0.5)^2 + 0 + (0.5)^2) / 3
    CHECK(evaluate_loss(model, {zero, half, one}) == doctest::Approx(1.0 / 6.0));
  }
  SUBCASE("empty set is rejected") {
    CHECK_THROWS_AS(evaluate_loss(model, {}), std::invalid_argument);
  }
}

TEST_CASE("evaluate_loss is invariant to pair order") {
  ModelConfig mc;
  mc.label_vocab = 2;
  mc.gin_dims = {4, 6, 8};
  mc.cost_layers = 2;
  mc.ntn_slices = 2;
  GnaModel model(mc, 5);
  auto pairs = mini_dataset(8, 21);
  REQUIRE(pairs.size() >= 4);
  std::vector<GraphPair> shuffled(pairs.rbegin(), pairs.rend());
  CHECK(evaluate_loss(model, pairs) ==
        doctest::Approx(evaluate_loss(model, shuffled)).epsilon(1e-12));
}

TEST_CASE("training runs, improves, restores the best epoch and is deterministic") {
  auto pairs = mini_dataset(12, 33);
  REQUIRE(pairs.size() >= 20);
  std::vector<GraphPair> train_set(pairs.begin(), pairs.begin() + 16);
  std::vector<GraphPair> val_set(pairs.begin() + 16, pairs.end());

  ModelConfig mc;
  mc.label_vocab = 2;
  mc.gin_dims = {4, 6, 8};
  mc.cost_layers = 2;
  mc.ntn_slices = 2;

  TrainConfig tc;
  tc.epochs = 3;
  tc.batch_size = 8;
  tc.seed = 7;

  GnaModel m1(mc, 9);
  TrainResult r1 = train(m1, train_set, val_set, tc);
  REQUIRE(r1.history.size() == 3);
  CHECK(r1.history[0].train_loss > r1.history[1].train_loss);
  CHECK(r1.history[1].train_loss > r1.history[2].train_loss);
  CHECK(r1.best_epoch >= 1);
  CHECK(r1.best_epoch <= 3);

  // The restored parameters reproduce the best validation MAE.
  CHECK(evaluate_mae(m1, val_set) == doctest::Approx(r1.best_val_mae).epsilon(1e-12));

  GnaModel m2(mc, 9);
  TrainResult r2 = train(m2, train_set, val_set, tc);
  REQUIRE(r2.history.size() == r1.history.size());
  for (std::size_t i = 0; i < r1.history.size(); ++i) {
    CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    CHECK(r1.history[i].val_mae == r2.history[i].val_mae);
    CHECK(r1.history[i].val_rho == r2.history[i].val_rho);
  }
  for (std::size_t i = 0; i < m1.parameters().size(); ++i)
    CHECK(m1.parameters()[i].values() == m2.parameters()[i].values());

  CHECK_THROWS_AS(train(m1, {}, val_set, tc), std::invalid_argument);
  CHECK_THROWS_AS(train(m1, train_set, {}, tc), std::invalid_argument);
}

TEST_CASE("history csv has the advertised header and one row per epoch") {
  std::vector<EpochStats> hist{{1, 0.5, 2.0, 0.1}, {2, 0.4, 1.5, 0.3}};
  const std::string path =
      (std::filesystem::temp_directory_path() / "gna_test_hist.csv").string();
  save_history_csv(path, hist);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "epoch,train_loss,val_mae,val_rho");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}
