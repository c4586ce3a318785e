#include "gna/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace gna {
namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b,
                   const char* who) {
  if (a.size() != b.size())
    throw std::invalid_argument(std::string(who) + ": length mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  if (a.empty()) throw std::invalid_argument(std::string(who) + ": empty input");
}

/// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
    i = j + 1;
  }
  return ranks;
}

std::vector<std::size_t> top_k_ids(const std::vector<double>& value, int k) {
  std::vector<std::size_t> order(value.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (value[a] != value[b]) return value[a] < value[b];
    return a < b;
  });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

}  // namespace

double mae(const std::vector<double>& pred, const std::vector<double>& truth) {
  check_lengths(pred, truth, "mae");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

double accuracy(const std::vector<double>& pred, const std::vector<double>& truth) {
  check_lengths(pred, truth, "accuracy");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (std::round(pred[i]) == truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

Correlation spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  check_lengths(x, y, "spearman_rho");
  if (x.size() < 2) throw std::invalid_argument("spearman_rho: need at least 2 points");
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return {0.0, true};
  return {sxy / std::sqrt(sxx * syy), false};
}

Correlation kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  check_lengths(x, y, "kendall_tau");
  if (x.size() < 2) throw std::invalid_argument("kendall_tau: need at least 2 points");
  const std::size_t n = x.size();
  long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j];
      const double dy = y[i] - y[j];
      if (dx == 0.0 && dy == 0.0) continue;
      if (dx == 0.0) {
        ++ties_x;
      } else if (dy == 0.0) {
        ++ties_y;
      } else if ((dx > 0.0) == (dy > 0.0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double n0 = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
  // Pairs tied in both vectors count toward both tie totals in tau-b.
  long long ties_both = 0;
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (x[a] != x[b]) return x[a] < x[b];
      return y[a] < y[b];
    });
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      while (j + 1 < n && x[order[j + 1]] == x[order[i]] && y[order[j + 1]] == y[order[i]]) ++j;
      const long long run = static_cast<long long>(j - i + 1);
      ties_both += run * (run - 1) / 2;
      i = j + 1;
    }
  }
  const double tx = static_cast<double>(ties_x + ties_both);
  const double ty = static_cast<double>(ties_y + ties_both);
  const double denom = std::sqrt((n0 - tx) * (n0 - ty));
  if (denom == 0.0) return {0.0, true};
  return {static_cast<double>(concordant - discordant) / denom, false};
}

double precision_at_k(const std::vector<double>& pred, const std::vector<double>& truth, int k) {
  check_lengths(pred, truth, "precision_at_k");
  if (k < 1) throw std::invalid_argument("precision_at_k: k must be >= 1");
  if (static_cast<std::size_t>(k) > pred.size())
    throw std::invalid_argument("precision_at_k: k exceeds the candidate count");
  const auto top_pred = top_k_ids(pred, k);
  const auto top_true = top_k_ids(truth, k);
  const std::unordered_set<std::size_t> truth_set(top_true.begin(), top_true.end());
  int hits = 0;
  for (std::size_t id : top_pred)
    if (truth_set.count(id)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(k);
}

RankingEvalResult run_ranking_eval(const std::vector<Graph>& corpus,
                                   const std::vector<Graph>& queries,
                                   const PairScorer& true_ged,
                                   const PairScorer& predicted_ged,
                                   const RankingEvalConfig& cfg) {
  if (cfg.candidate_count < 2)
    throw std::invalid_argument("ranking eval: candidate_count must be >= 2");
  if (queries.empty()) throw std::invalid_argument("ranking eval: no queries");
  for (int k : cfg.k_list)
    if (k < 1 || k > cfg.candidate_count)
      throw std::invalid_argument("ranking eval: k=" + std::to_string(k) +
                                  " outside [1, candidate_count]");

  RankingEvalResult result;
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    const Graph& query = queries[qi];

    std::vector<std::size_t> eligible;
    eligible.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (corpus[i].id != query.id) eligible.push_back(i);
    if (eligible.size() < static_cast<std::size_t>(cfg.candidate_count))
      throw std::invalid_argument("ranking eval: corpus has only " +
                                  std::to_string(eligible.size()) +
                                  " graphs distinct from query '" + query.id + "', need " +
                                  std::to_string(cfg.candidate_count));

    std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (qi + 1)));
    for (int t = 0; t < cfg.candidate_count; ++t) {
      std::uniform_int_distribution<std::size_t> pick(t, eligible.size() - 1);
      std::swap(eligible[t], eligible[pick(rng)]);
    }

    std::vector<double> truths(cfg.candidate_count), preds(cfg.candidate_count);
    for (int t = 0; t < cfg.candidate_count; ++t) {
      const Graph& cand = corpus[eligible[t]];
      truths[t] = true_ged(query, cand);
      preds[t] = predicted_ged(query, cand);
    }

    QueryRanking qr;
    qr.query_id = query.id;
    qr.rho = spearman_rho(preds, truths);
    qr.tau = kendall_tau(preds, truths);
    for (int k : cfg.k_list) qr.precision[k] = precision_at_k(preds, truths, k);
    result.per_query.push_back(std::move(qr));
  }

  const double nq = static_cast<double>(result.per_query.size());
  for (const auto& qr : result.per_query) {
    result.mean_rho += qr.rho.value / nq;
    result.mean_tau += qr.tau.value / nq;
    for (const auto& [k, p] : qr.precision) result.mean_precision[k] += p / nq;
  }
  return result;
}

void save_eval_summary(const std::string& path, const EvalSummary& summary) {
  nlohmann::json per_query = nlohmann::json::array();
  for (const auto& qr : summary.ranking.per_query) {
    nlohmann::json q{{"query", qr.query_id},
                     {"rho", qr.rho.value},
                     {"tau", qr.tau.value},
                     {"degenerate", qr.rho.degenerate || qr.tau.degenerate}};
    for (const auto& [k, p] : qr.precision) q["p@" + std::to_string(k)] = p;
    per_query.push_back(std::move(q));
  }
  nlohmann::json mean{{"mae", summary.pair_mae},
                      {"accuracy", summary.pair_accuracy},
                      {"rho", summary.ranking.mean_rho},
                      {"tau", summary.ranking.mean_tau}};
  for (const auto& [k, p] : summary.ranking.mean_precision)
    mean["p@" + std::to_string(k)] = p;

  nlohmann::json j{{"dataset", summary.dataset},
                   {"variant", summary.variant},
                   {"pair_count", summary.pair_count},
                   {"per_query", std::move(per_query)},
                   {"mean", std::move(mean)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("eval summary: cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("eval summary: failed writing '" + path + "'");
}

}  // namespace gna
