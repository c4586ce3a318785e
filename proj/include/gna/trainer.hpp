#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gna/graph.hpp"
#include "gna/model.hpp"

namespace gna {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 128;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
};

struct EpochStats {
  int epoch = 0;          // 1-based
  double train_loss = 0;  // mean squared error over the epoch's pairs
  double val_mae = 0;     // denormalized GED scale
  double val_rho = 0;     // Spearman over the validation pairs
};

struct TrainResult {
  std::vector<EpochStats> history;
  int best_epoch = 0;
  double best_val_mae = 0.0;
};

/// Mini-batch MSE training with Adam (decoupled weight decay). Shuffles each
/// epoch, resamples Gumbel noise per forward pass, and finishes by restoring
/// the parameters of the epoch with the lowest validation MAE.
TrainResult train(GnaModel& model, const std::vector<GraphPair>& train_pairs,
                  const std::vector<GraphPair>& val_pairs, const TrainConfig& cfg);

/// Mean squared error between predicted and ground-truth scores, noise off.
double evaluate_loss(const GnaModel& model, const std::vector<GraphPair>& pairs);

/// MAE between denormalized predictions and true GEDs, noise off.
double evaluate_mae(const GnaModel& model, const std::vector<GraphPair>& pairs);

void save_history_csv(const std::string& path, const std::vector<EpochStats>& history);

}  // namespace gna
