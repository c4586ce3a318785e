#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gna/graph.hpp"

namespace gna {

/// Rank-correlation value plus a flag for the degenerate case (a constant
/// vector has no defined correlation; the value is reported as 0).
struct Correlation {
  double value = 0.0;
  bool degenerate = false;
};

/// Mean absolute error between predicted and true GEDs (GED units, not scores).
double mae(const std::vector<double>& pred, const std::vector<double>& truth);

/// Fraction of predictions whose rounded value (half away from zero) equals
/// the integer ground truth.
double accuracy(const std::vector<double>& pred, const std::vector<double>& truth);

/// Spearman's rho with average ranks for ties.
Correlation spearman_rho(const std::vector<double>& x, const std::vector<double>& y);

/// Kendall's tau-b (tie-aware).
Correlation kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

/// |top-k by predicted GED ∩ top-k by true GED| / k. Smallest value ranks
/// first; ties are broken by element index on both sides.
double precision_at_k(const std::vector<double>& pred, const std::vector<double>& truth, int k);

// ---- retrieval protocol -------------------------------------------------------

struct RankingEvalConfig {
  int candidate_count = 100;
  std::vector<int> k_list = {10, 20};
  std::uint64_t seed = 0;
};

struct QueryRanking {
  std::string query_id;
  Correlation rho;
  Correlation tau;
  std::map<int, double> precision;  // k -> P@k
};

struct RankingEvalResult {
  std::vector<QueryRanking> per_query;
  double mean_rho = 0.0;
  double mean_tau = 0.0;
  std::map<int, double> mean_precision;
};

/// Scores one (query, candidate) pair on the GED scale.
using PairScorer = std::function<double(const Graph&, const Graph&)>;

/// For each query: sample candidate_count distinct corpus graphs (never the
/// query itself, resolved by id), score them with both scorers, and compute
/// rho, tau and P@k on the two GED lists. Candidate draws depend only on
/// (seed, query index).
RankingEvalResult run_ranking_eval(const std::vector<Graph>& corpus,
                                   const std::vector<Graph>& queries,
                                   const PairScorer& true_ged,
                                   const PairScorer& predicted_ged,
                                   const RankingEvalConfig& cfg);

// ---- results file -------------------------------------------------------------

struct EvalSummary {
  std::string dataset;
  std::string variant = "full";  // full | no_gumbel_sinkhorn | no_add_delete_cost
  double pair_mae = 0.0;
  double pair_accuracy = 0.0;
  int pair_count = 0;
  RankingEvalResult ranking;
};

void save_eval_summary(const std::string& path, const EvalSummary& summary);

}  // namespace gna
