#include "gna/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "gna/metrics.hpp"
#include "gna/tensor.hpp"

namespace gna {
namespace {

void validate_config(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
  if (cfg.weight_decay < 0.0)
    throw std::invalid_argument("train config: weight_decay must be >= 0");
}

struct EvalStats {
  double mae = 0.0;
  double rho = 0.0;
};

EvalStats eval_pass(const GnaModel& model, const std::vector<GraphPair>& pairs) {
  std::vector<double> pred, truth;
  pred.reserve(pairs.size());
  truth.reserve(pairs.size());
  for (const auto& p : pairs) {
    const double score = model.forward_score(p.g1, p.g2, Mode::Eval, nullptr).item();
    pred.push_back(denormalize_score(score, p.g1, p.g2));
    truth.push_back(static_cast<double>(p.ged));
  }
  EvalStats out;
  out.mae = mae(pred, truth);
  out.rho = pairs.size() >= 2 ? spearman_rho(pred, truth).value : 0.0;
  return out;
}

}  // namespace

TrainResult train(GnaModel& model, const std::vector<GraphPair>& train_pairs,
                  const std::vector<GraphPair>& val_pairs, const TrainConfig& cfg) {
  validate_config(cfg);
  if (train_pairs.empty()) throw std::invalid_argument("train: empty training set");
  if (val_pairs.empty()) throw std::invalid_argument("train: empty validation set");

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  adam_cfg.weight_decay = cfg.weight_decay;
  AdamState adam(model.parameters(), adam_cfg);

  std::mt19937_64 master(cfg.seed);
  std::mt19937_64 shuffle_rng(master());
  std::mt19937_64 noise_master(master());

  TrainResult result;
  std::vector<std::vector<double>> best_values;
  double best_mae = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(train_pairs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_sq_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const double batch_n = static_cast<double>(stop - start);
      adam.zero_grad();
      for (std::size_t pos = start; pos < stop; ++pos) {
        const GraphPair& p = train_pairs[order[pos]];
        std::mt19937_64 pair_rng(noise_master());
        try {
          Tensor score = model.forward_score(p.g1, p.g2, Mode::Train, &pair_rng);
          Tensor diff = add(score, Tensor::scalar(-p.gt_score));
          Tensor sq = elementwise_mul(diff, diff);
          backward(scalar_mul(sq, 1.0 / batch_n));
          epoch_sq_sum += sq.item();
        } catch (const std::exception& e) {
          throw std::runtime_error(
              "training aborted at epoch " + std::to_string(epoch) + ", batch starting at " +
              std::to_string(start) + ", pair ('" + p.g1.id + "','" + p.g2.id +
              "'), tau=" + std::to_string(model.config().tau) + ": " + e.what());
        }
      }
      adam.step();
    }

    const EvalStats val = eval_pass(model, val_pairs);
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_sq_sum / static_cast<double>(train_pairs.size());
    stats.val_mae = val.mae;
    stats.val_rho = val.rho;
    result.history.push_back(stats);

    if (val.mae < best_mae) {
      best_mae = val.mae;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& p : model.parameters()) best_values.push_back(p.values());
    }
  }

  const auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    model.set_param_values(params[i].name(), best_values[i]);
  result.best_val_mae = best_mae;
  return result;
}

double evaluate_loss(const GnaModel& model, const std::vector<GraphPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_loss: empty pair set");
  double total = 0.0;
  for (const auto& p : pairs) {
    const double score = model.forward_score(p.g1, p.g2, Mode::Eval, nullptr).item();
    const double diff = score - p.gt_score;
    total += diff * diff;
  }
  return total / static_cast<double>(pairs.size());
}

double evaluate_mae(const GnaModel& model, const std::vector<GraphPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("evaluate_mae: empty pair set");
  return eval_pass(model, pairs).mae;
}

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("history: cannot open '" + path + "' for writing");
  out << "epoch,train_loss,val_mae,val_rho\n";
  char line[160];
  for (const auto& e : history) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g\n", e.epoch, e.train_loss, e.val_mae,
                  e.val_rho);
    out << line;
  }
  if (!out) throw std::runtime_error("history: failed writing '" + path + "'");
}

}  // namespace gna
