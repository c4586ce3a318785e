#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gna/graph.hpp"
#include "gna/tensor.hpp"

namespace gna {

/// Hyper-parameters of the network. Defaults follow the reference setting:
/// three GIN layers (32/64/128), 16 bilinear cost channels, 16 NTN slices,
/// temperature 0.1, 20 Sinkhorn rounds minimum.
struct ModelConfig {
  int label_vocab = 1;  // M; one-hot width (>=1). Unlabeled nodes get a constant row.
  std::vector<int> gin_dims = {32, 64, 128};
  int cost_layers = 16;  // L bilinear channels fused by a learned 1x1 combination
  int ntn_slices = 16;   // K
  double tau = 0.1;
  int sinkhorn_iters = 20;  // minimum rounds; iteration continues to tolerance
  double unlabeled_constant = 1.0;
  bool no_gumbel_sinkhorn = false;  // ablation: plain row-softmax matching
  bool no_add_delete_cost = false;  // ablation: zero-vector padding in the cost branch

  int embed_dim() const { return gin_dims.back(); }
};

/// Doubly-stochastic tolerance the matching operator converges to, and the
/// hard cap on Sinkhorn rounds before giving up.
inline constexpr double kDoublyStochasticTol = 1e-3;
inline constexpr int kSinkhornMaxRounds = 20000;

enum class Mode { Train, Eval };

/// Node-level edit deduced from the hard alignment.
struct NodeOp {
  enum class Kind { Match, Substitute, Insert };
  Kind kind;
  int g1_node = -1;  // -1 for Insert (the row was a padding row)
  int g2_node = -1;
  int g1_label = -1;
  int g2_label = -1;
};

/// Everything the matching pipeline produced for one pair.
struct AlignmentReport {
  int n1 = 0;
  int n2 = 0;
  std::vector<double> cost_matrix;    // n2 x n2 row-major
  std::vector<double> soft_matching;  // n2 x n2, doubly stochastic
  std::vector<int> hard_permutation;  // row -> column
  double predicted_score = 0.0;       // in (0,1)
  double predicted_ged = 0.0;
  std::vector<NodeOp> node_ops;
};

struct Prediction {
  double score = 0.0;
  AlignmentReport report;
};

// ---- stateless building blocks ----------------------------------------------

/// One-hot node features; label -1 rows are filled with the shared constant.
Tensor initial_features(const Graph& g, int label_vocab, double unlabeled_constant);

/// Pads H1 (n1 x d) to n2 rows with copies of pad_row (the mean-pooled graph
/// embedding, or zeros under the no-add-delete-cost ablation).
Tensor pad_embeddings(const Tensor& h1, int n2, const Tensor& pad_row);

/// exp((M + G)/tau) followed by alternating row/column normalization. Runs at
/// least `iters` rounds and continues until every row and column sum is within
/// kDoublyStochasticTol of 1 (throws after kSinkhornMaxRounds). Gradients flow
/// through the executed rounds. G is i.i.d. Gumbel(0,1) when noise is on.
/// rounds_out, if given, receives the number of rounds executed.
Tensor gumbel_sinkhorn(const Tensor& m, double tau, int iters, bool noise,
                       std::mt19937_64* rng, int* rounds_out = nullptr);

/// Permutation maximizing the soft matching mass; ties prefer the identity.
std::vector<int> harden(const std::vector<double>& soft, int n);

// ---- the model ---------------------------------------------------------------

class GnaModel {
 public:
  GnaModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<Tensor>& parameters() const { return params_; }
  Tensor param(const std::string& name) const;

  /// Node embeddings after the GIN stack (n x d graph).
  Tensor gin_encode(const Graph& g) const;

  /// Full forward pass to the sigmoid score (1x1 tensor, differentiable).
  /// In Train mode Gumbel noise is resampled from rng on every call.
  Tensor forward_score(const Graph& g1, const Graph& g2, Mode mode,
                       std::mt19937_64* rng) const;

  /// Raw matching similarities (n2 x n2) fed to the normalizer, before any
  /// temperature scaling or noise. Diagnostic view of the matching branch.
  Tensor matching_logits(const Graph& g1, const Graph& g2) const;

  /// Forward pass plus the alignment report (hard permutation, node ops).
  Prediction predict(const GraphPair& pair, Mode mode, std::mt19937_64* rng) const;

  void zero_grad();

  /// Replaces parameter values (shapes must match; used by checkpoint load).
  void set_param_values(const std::string& name, const std::vector<double>& values);

 private:
  struct ForwardPieces {
    Tensor cost;        // n2 x n2
    Tensor matching;    // n2 x n2
    Tensor score;       // 1x1
  };
  ForwardPieces forward_pieces(const Graph& g1, const Graph& g2, Mode mode,
                               std::mt19937_64* rng) const;
  Tensor lrl(const Tensor& h) const;
  Tensor ntn_bias(const Tensor& hg1, const Tensor& hg2) const;

  ModelConfig cfg_;
  std::vector<Tensor> params_;  // creation order, stable across runs
  std::vector<std::string> names_;

  Tensor add_param(const std::string& name, int rows, int cols, double init_bound,
                   std::mt19937_64& rng);
};

// ---- checkpoint --------------------------------------------------------------

void save_checkpoint(const std::string& path, const GnaModel& model);
GnaModel load_checkpoint(const std::string& path);

}  // namespace gna
