#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gna/exact_ged.hpp"
#include "gna/graph.hpp"
#include "gna/metrics.hpp"
#include "gna/model.hpp"
#include "gna/report_io.hpp"
#include "gna/trainer.hpp"

namespace {

constexpr const char* kVersion = "gna_cli 1.0.0 (checkpoint format 1, graph/pair files jsonl v1)";

/// Stable per-component sub-seed derived from the run's master seed.
std::uint64_t sub_seed(std::uint64_t master, int component) {
  return master + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(component + 1);
}

enum SeedSlot {
  kSeedGraphs = 0,
  kSeedPairs = 1,
  kSeedSplit = 2,
  kSeedModel = 3,
  kSeedTrain = 4,
  kSeedQueries = 5,
  kSeedRanking = 6,
};

struct TrainSettings {
  int epochs = 20;
  int batch_size = 128;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  double tau = 0.1;
  int sinkhorn_iters = 20;
  std::uint64_t seed = 0;
  int label_vocab = 0;  // 0 = derive from the data
  std::vector<int> gin_dims = {32, 64, 128};
  int cost_layers = 16;
  int ntn_slices = 16;
  bool no_gumbel_sinkhorn = false;
  bool no_add_delete_cost = false;
  double train_ratio = 0.6;
  double val_ratio = 0.2;
  double test_ratio = 0.2;
};

/// Fills settings fields from a JSON config file for every option the user
/// did not pass explicitly (flags win).
void merge_config_file(CLI::App* cmd, const std::string& path, TrainSettings& s) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ValidationError("--config", "'" + path + "' is not valid JSON: " + e.what());
  }
  auto take = [&](const char* flag, const char* key, auto& field) {
    if (cmd->count(flag) == 0 && j.contains(key))
      field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  take("--epochs", "epochs", s.epochs);
  take("--batch", "batch_size", s.batch_size);
  take("--lr", "lr", s.lr);
  take("--wd", "weight_decay", s.weight_decay);
  take("--tau", "tau", s.tau);
  take("--iters", "sinkhorn_iters", s.sinkhorn_iters);
  take("--seed", "seed", s.seed);
  take("--label-vocab", "label_vocab", s.label_vocab);
  take("--gin-dims", "gin_dims", s.gin_dims);
  take("--cost-layers", "cost_layers", s.cost_layers);
  take("--ntn-slices", "ntn_slices", s.ntn_slices);
  take("--no-gumbel-sinkhorn", "no_gumbel_sinkhorn", s.no_gumbel_sinkhorn);
  take("--no-add-delete-cost", "no_add_delete_cost", s.no_add_delete_cost);
  take("--train-ratio", "train_ratio", s.train_ratio);
  take("--val-ratio", "val_ratio", s.val_ratio);
  take("--test-ratio", "test_ratio", s.test_ratio);
}

void add_train_options(CLI::App* cmd, TrainSettings& s, std::string& config_path) {
  cmd->add_option("--config", config_path, "JSON config file; explicit flags win");
  cmd->add_option("--epochs", s.epochs, "training epochs");
  cmd->add_option("--batch", s.batch_size, "mini-batch size");
  cmd->add_option("--lr", s.lr, "Adam learning rate");
  cmd->add_option("--wd", s.weight_decay, "decoupled weight decay");
  cmd->add_option("--tau", s.tau, "Gumbel-Sinkhorn temperature");
  cmd->add_option("--iters", s.sinkhorn_iters, "minimum Sinkhorn rounds");
  cmd->add_option("--seed", s.seed, "master seed");
  cmd->add_option("--label-vocab", s.label_vocab, "label vocabulary size (0 = from data)");
  cmd->add_option("--gin-dims", s.gin_dims, "GIN layer widths")->delimiter(',');
  cmd->add_option("--cost-layers", s.cost_layers, "bilinear cost channels");
  cmd->add_option("--ntn-slices", s.ntn_slices, "NTN slices");
  cmd->add_flag("--no-gumbel-sinkhorn", s.no_gumbel_sinkhorn, "row-softmax matching ablation");
  cmd->add_flag("--no-add-delete-cost", s.no_add_delete_cost, "zero-pad cost branch ablation");
  cmd->add_option("--train-ratio", s.train_ratio, "train split fraction");
  cmd->add_option("--val-ratio", s.val_ratio, "validation split fraction");
  cmd->add_option("--test-ratio", s.test_ratio, "test split fraction");
}

int derive_label_vocab(const std::vector<gna::Graph>& graphs) {
  int max_label = -1;
  for (const auto& g : graphs)
    for (int l : g.node_labels) max_label = std::max(max_label, l);
  return max_label < 0 ? 1 : max_label + 1;
}

gna::ModelConfig model_config_from(const TrainSettings& s, const std::vector<gna::Graph>& graphs) {
  gna::ModelConfig mc;
  mc.label_vocab = s.label_vocab > 0 ? s.label_vocab : derive_label_vocab(graphs);
  mc.gin_dims = s.gin_dims;
  mc.cost_layers = s.cost_layers;
  mc.ntn_slices = s.ntn_slices;
  mc.tau = s.tau;
  mc.sinkhorn_iters = s.sinkhorn_iters;
  mc.no_gumbel_sinkhorn = s.no_gumbel_sinkhorn;
  mc.no_add_delete_cost = s.no_add_delete_cost;
  return mc;
}

gna::DatasetSplit load_and_split(const std::string& graphs_path, const std::string& pairs_path,
                                 const TrainSettings& s, std::vector<gna::Graph>* graphs_out) {
  auto graphs = gna::load_graphs(graphs_path);
  auto records = gna::load_pair_records(pairs_path);
  auto pairs = gna::resolve_pairs(records, graphs);
  gna::SplitRatios ratios{s.train_ratio, s.val_ratio, s.test_ratio};
  auto split = gna::split_dataset(std::move(pairs), ratios, sub_seed(s.seed, kSeedSplit));
  if (graphs_out) *graphs_out = std::move(graphs);
  return split;
}

/// Orders a pair by size and returns the model's denormalized GED prediction.
double predict_ged(const gna::GnaModel& model, const gna::Graph& a, const gna::Graph& b) {
  const gna::Graph& g1 = a.num_nodes() <= b.num_nodes() ? a : b;
  const gna::Graph& g2 = a.num_nodes() <= b.num_nodes() ? b : a;
  const double score = model.forward_score(g1, g2, gna::Mode::Eval, nullptr).item();
  return gna::denormalize_score(score, g1, g2);
}

// ---- subcommand bodies ---------------------------------------------------------

struct GenDataArgs {
  int count = 50;
  int n_min = 2;
  int n_max = 6;
  double density = 0.5;
  int labels = 0;
  int pairs = 200;
  long long budget = gna::kDefaultGedBudget;
  int threads = 1;
  std::uint64_t seed = 0;
  std::string out_graphs;
  std::string out_pairs;
};

int run_gen_data(const GenDataArgs& a) {
  gna::SyntheticConfig cfg;
  cfg.count = a.count;
  cfg.n_min = a.n_min;
  cfg.n_max = a.n_max;
  cfg.edge_density = a.density;
  cfg.label_count = a.labels;
  cfg.seed = sub_seed(a.seed, kSeedGraphs);
  auto graphs = gna::generate_synthetic(cfg);

  gna::GedOracle oracle = [&](const gna::Graph& g1, const gna::Graph& g2) -> std::optional<int> {
    gna::ExactGedResult res = gna::exact_ged(g1, g2, a.budget);
    if (!res.solved) return std::nullopt;
    return res.ged;
  };
  auto built = gna::build_pairs(graphs, oracle, a.pairs, sub_seed(a.seed, kSeedPairs), a.threads);

  gna::save_graphs(a.out_graphs, graphs);
  std::vector<gna::PairRecord> records;
  records.reserve(built.pairs.size());
  for (const auto& p : built.pairs) records.push_back({p.g1.id, p.g2.id, p.ged});
  gna::save_pair_records(a.out_pairs, records);

  const int sampled = static_cast<int>(built.pairs.size()) + built.skipped_unsolved +
                      built.skipped_invalid;
  std::cout << "graphs: " << graphs.size() << "\n"
            << "pairs: " << built.pairs.size() << " (skipped unsolved: " << built.skipped_unsolved
            << ", skipped invalid: " << built.skipped_invalid << ")\n";
  if (sampled > 0 && built.skipped_unsolved > sampled / 10) {
    std::cerr << "error: exact-GED budget exhausted on more than 10% of sampled pairs ("
              << built.skipped_unsolved << "/" << sampled
              << "); raise --budget or shrink the graphs\n";
    return 2;
  }
  return 0;
}

struct TrainArgs {
  std::string graphs_path;
  std::string pairs_path;
  std::string out_checkpoint;
  std::string out_history;
  TrainSettings settings;
};

int run_train(const TrainArgs& a) {
  std::vector<gna::Graph> graphs;
  gna::DatasetSplit split = load_and_split(a.graphs_path, a.pairs_path, a.settings, &graphs);
  std::cout << "split: train " << split.train.size() << ", val " << split.validation.size()
            << ", test " << split.test.size() << "\n";

  gna::GnaModel model(model_config_from(a.settings, graphs), sub_seed(a.settings.seed, kSeedModel));

  gna::TrainConfig tc;
  tc.epochs = a.settings.epochs;
  tc.batch_size = a.settings.batch_size;
  tc.lr = a.settings.lr;
  tc.weight_decay = a.settings.weight_decay;
  tc.seed = sub_seed(a.settings.seed, kSeedTrain);
  gna::TrainResult result = gna::train(model, split.train, split.validation, tc);

  for (const auto& e : result.history)
    std::cout << "epoch " << e.epoch << ": train_loss " << e.train_loss << ", val_mae "
              << e.val_mae << ", val_rho " << e.val_rho << "\n";
  std::cout << "best epoch: " << result.best_epoch << " (val_mae " << result.best_val_mae << ")\n";

  if (!a.out_history.empty()) gna::save_history_csv(a.out_history, result.history);
  gna::save_checkpoint(a.out_checkpoint, model);
  std::cout << "checkpoint: " << a.out_checkpoint << "\n";
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string graphs_path;
  std::string pairs_path;
  std::string out_path;
  std::string split = "test";
  std::string dataset_name = "synthetic";
  int queries = 30;
  int candidates = 60;
  std::vector<int> k_list = {10, 20};
  long long budget = gna::kDefaultGedBudget;
  TrainSettings settings;  // seed + ratios drive the split reconstruction
};

int run_eval(const EvalArgs& a) {
  gna::GnaModel model = gna::load_checkpoint(a.checkpoint);
  std::vector<gna::Graph> graphs;
  gna::DatasetSplit split = load_and_split(a.graphs_path, a.pairs_path, a.settings, &graphs);

  const std::vector<gna::GraphPair>* pairs = nullptr;
  std::vector<gna::GraphPair> all;
  if (a.split == "train") {
    pairs = &split.train;
  } else if (a.split == "val") {
    pairs = &split.validation;
  } else if (a.split == "test") {
    pairs = &split.test;
  } else if (a.split == "all") {
    all = split.train;
    all.insert(all.end(), split.validation.begin(), split.validation.end());
    all.insert(all.end(), split.test.begin(), split.test.end());
    pairs = &all;
  } else {
    std::cerr << "error: unknown --split '" << a.split << "'\n";
    return 2;
  }
  if (pairs->empty()) {
    std::cerr << "error: selected split is empty\n";
    return 2;
  }

  std::vector<double> pred, truth;
  for (const auto& p : *pairs) {
    const double score = model.forward_score(p.g1, p.g2, gna::Mode::Eval, nullptr).item();
    pred.push_back(gna::denormalize_score(score, p.g1, p.g2));
    truth.push_back(static_cast<double>(p.ged));
  }

  gna::EvalSummary summary;
  summary.dataset = a.dataset_name;
  if (model.config().no_gumbel_sinkhorn) summary.variant = "no_gumbel_sinkhorn";
  if (model.config().no_add_delete_cost) summary.variant = "no_add_delete_cost";
  summary.pair_mae = gna::mae(pred, truth);
  summary.pair_accuracy = gna::accuracy(pred, truth);
  summary.pair_count = static_cast<int>(pred.size());

  // Retrieval protocol: sampled query graphs against sampled candidates.
  std::vector<std::size_t> order(graphs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(sub_seed(a.settings.seed, kSeedQueries)));
  std::vector<gna::Graph> queries;
  for (std::size_t i = 0; i < order.size() && static_cast<int>(queries.size()) < a.queries; ++i)
    queries.push_back(graphs[order[i]]);

  gna::PairScorer truth_fn = [&](const gna::Graph& q, const gna::Graph& c) {
    gna::ExactGedResult res = gna::exact_ged(q, c, a.budget);
    if (!res.solved)
      throw std::runtime_error("eval: exact GED budget exhausted on pair ('" + q.id + "','" +
                               c.id + "'); raise --budget");
    return static_cast<double>(res.ged);
  };
  gna::PairScorer pred_fn = [&](const gna::Graph& q, const gna::Graph& c) {
    return predict_ged(model, q, c);
  };
  gna::RankingEvalConfig rc;
  rc.candidate_count = a.candidates;
  rc.k_list = a.k_list;
  rc.seed = sub_seed(a.settings.seed, kSeedRanking);
  summary.ranking = gna::run_ranking_eval(graphs, queries, truth_fn, pred_fn, rc);

  gna::save_eval_summary(a.out_path, summary);
  std::cout << "pairs(" << a.split << "): mae " << summary.pair_mae << ", accuracy "
            << summary.pair_accuracy << "\n"
            << "ranking: rho " << summary.ranking.mean_rho << ", tau " << summary.ranking.mean_tau;
  for (const auto& [k, p] : summary.ranking.mean_precision) std::cout << ", p@" << k << " " << p;
  std::cout << "\nresults: " << a.out_path << "\n";
  return 0;
}

struct AlignArgs {
  std::string checkpoint;
  std::string graphs_path;
  std::string id1;
  std::string id2;
  std::string out_json;
  std::string out_dot;
};

int run_align(const AlignArgs& a) {
  gna::GnaModel model = gna::load_checkpoint(a.checkpoint);
  auto graphs = gna::load_graphs(a.graphs_path);
  const gna::Graph* g1 = nullptr;
  const gna::Graph* g2 = nullptr;
  for (const auto& g : graphs) {
    if (g.id == a.id1) g1 = &g;
    if (g.id == a.id2) g2 = &g;
  }
  if (!g1 || !g2) {
    std::cerr << "error: graph id not found: " << (!g1 ? a.id1 : a.id2) << "\n";
    return 2;
  }
  const gna::Graph& first = g1->num_nodes() <= g2->num_nodes() ? *g1 : *g2;
  const gna::Graph& second = g1->num_nodes() <= g2->num_nodes() ? *g2 : *g1;

  gna::GraphPair pair;
  pair.g1 = first;
  pair.g2 = second;
  gna::Prediction pred = model.predict(pair, gna::Mode::Eval, nullptr);
  gna::save_alignment_json(a.out_json, pred.report, first, second);
  gna::save_alignment_dot(a.out_dot, pred.report, first, second);
  std::cout << "predicted score " << pred.score << " (ged " << pred.report.predicted_ged << ")\n"
            << "report: " << a.out_json << ", " << a.out_dot << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interpretable graph-similarity model: data generation, training, evaluation, "
               "alignment reports"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GenDataArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen-data", "generate synthetic graphs and GED labels");
  gen_cmd->add_option("--count", gen.count, "number of graphs");
  gen_cmd->add_option("--n-min", gen.n_min, "minimum nodes")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--n-max", gen.n_max, "maximum nodes")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--density", gen.density, "edge density in (0,1]");
  gen_cmd->add_option("--labels", gen.labels, "label count (0 = unlabeled)");
  gen_cmd->add_option("--pairs", gen.pairs, "pairs to sample and label");
  gen_cmd->add_option("--budget", gen.budget, "A* node-expansion budget per pair");
  gen_cmd->add_option("--threads", gen.threads, "oracle threads");
  gen_cmd->add_option("--seed", gen.seed, "master seed");
  gen_cmd->add_option("--out-graphs", gen.out_graphs, "graph file")->required();
  gen_cmd->add_option("--out-pairs", gen.out_pairs, "pair file")->required();

  TrainArgs tr;
  std::string tr_config;
  CLI::App* tr_cmd = app.add_subcommand("train", "train on labeled pairs");
  tr_cmd->add_option("--graphs", tr.graphs_path, "graph file")->required();
  tr_cmd->add_option("--pairs", tr.pairs_path, "pair file")->required();
  tr_cmd->add_option("--out", tr.out_checkpoint, "checkpoint output")->required();
  tr_cmd->add_option("--history", tr.out_history, "history CSV output");
  add_train_options(tr_cmd, tr.settings, tr_config);

  EvalArgs ev;
  std::string ev_config;
  CLI::App* ev_cmd = app.add_subcommand("eval", "compute metrics for a checkpoint");
  ev_cmd->add_option("--checkpoint", ev.checkpoint, "model checkpoint")->required();
  ev_cmd->add_option("--graphs", ev.graphs_path, "graph file")->required();
  ev_cmd->add_option("--pairs", ev.pairs_path, "pair file")->required();
  ev_cmd->add_option("--out", ev.out_path, "metrics JSON output")->required();
  ev_cmd->add_option("--split", ev.split, "train|val|test|all (default test)");
  ev_cmd->add_option("--dataset-name", ev.dataset_name, "name recorded in the results file");
  ev_cmd->add_option("--queries", ev.queries, "ranking queries");
  ev_cmd->add_option("--candidates", ev.candidates, "candidates per query");
  ev_cmd->add_option("--k", ev.k_list, "precision cutoffs")->delimiter(',');
  ev_cmd->add_option("--budget", ev.budget, "A* budget for true GEDs");
  add_train_options(ev_cmd, ev.settings, ev_config);

  AlignArgs al;
  CLI::App* al_cmd = app.add_subcommand("align", "write the alignment report for one pair");
  al_cmd->add_option("--checkpoint", al.checkpoint, "model checkpoint")->required();
  al_cmd->add_option("--graphs", al.graphs_path, "graph file")->required();
  al_cmd->add_option("--g1", al.id1, "first graph id")->required();
  al_cmd->add_option("--g2", al.id2, "second graph id")->required();
  al_cmd->add_option("--out-json", al.out_json, "report JSON path")->required();
  al_cmd->add_option("--out-dot", al.out_dot, "report DOT path")->required();

  TrainArgs ab;
  std::string ab_config;
  std::string ab_variant;
  CLI::App* ab_cmd = app.add_subcommand("ablate", "train an ablation variant");
  ab_cmd->add_option("--variant", ab_variant, "no-gs | no-pad")
      ->required()
      ->check(CLI::IsMember({"no-gs", "no-pad"}));
  ab_cmd->add_option("--graphs", ab.graphs_path, "graph file")->required();
  ab_cmd->add_option("--pairs", ab.pairs_path, "pair file")->required();
  ab_cmd->add_option("--out", ab.out_checkpoint, "checkpoint output")->required();
  ab_cmd->add_option("--history", ab.out_history, "history CSV output");
  add_train_options(ab_cmd, ab.settings, ab_config);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) {
      return run_gen_data(gen);
    }
    if (tr_cmd->parsed()) {
      if (!tr_config.empty()) merge_config_file(tr_cmd, tr_config, tr.settings);
      return run_train(tr);
    }
    if (ev_cmd->parsed()) {
      if (!ev_config.empty()) merge_config_file(ev_cmd, ev_config, ev.settings);
      return run_eval(ev);
    }
    if (al_cmd->parsed()) {
      return run_align(al);
    }
    if (ab_cmd->parsed()) {
      if (!ab_config.empty()) merge_config_file(ab_cmd, ab_config, ab.settings);
      ab.settings.no_gumbel_sinkhorn = (ab_variant == "no-gs");
      ab.settings.no_add_delete_cost = (ab_variant == "no-pad");
      std::cout << "ablation variant: " << ab_variant << "\n";
      return run_train(ab);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
