#include "gna/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "gna/assignment.hpp"

namespace gna {
namespace {

void validate_config(const ModelConfig& cfg) {
  if (cfg.label_vocab < 1) throw std::invalid_argument("model config: label_vocab must be >= 1");
  if (cfg.gin_dims.empty()) throw std::invalid_argument("model config: gin_dims must be non-empty");
  for (int d : cfg.gin_dims)
    if (d < 1) throw std::invalid_argument("model config: gin_dims entries must be >= 1");
  if (cfg.cost_layers < 1) throw std::invalid_argument("model config: cost_layers must be >= 1");
  if (cfg.ntn_slices < 1) throw std::invalid_argument("model config: ntn_slices must be >= 1");
  if (!(cfg.tau > 0.0)) throw std::invalid_argument("model config: tau must be positive");
  if (cfg.sinkhorn_iters < 1)
    throw std::invalid_argument("model config: sinkhorn_iters must be >= 1");
}

double max_marginal_deviation(const Tensor& s) {
  const int n = s.rows();
  const auto& v = s.values();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += v[static_cast<std::size_t>(i) * n + j];
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  for (int j = 0; j < n; ++j) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += v[static_cast<std::size_t>(i) * n + j];
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

/// max(x, -700) built from relu so exp never underflows to exact zero; a zero
/// entry would make the Sinkhorn limit unreachable for its column.
Tensor floor_exponent(const Tensor& x) {
  const int n = x.rows();
  Tensor up = Tensor::full(n, x.cols(), 700.0);
  Tensor down = Tensor::full(n, x.cols(), -700.0);
  return add(relu(add(x, up)), down);
}

}  // namespace

// ---- stateless pieces --------------------------------------------------------

Tensor initial_features(const Graph& g, int label_vocab, double unlabeled_constant) {
  if (label_vocab < 1) throw std::invalid_argument("initial_features: label_vocab must be >= 1");
  const int n = g.num_nodes();
  std::vector<double> vals(static_cast<std::size_t>(n) * label_vocab, 0.0);
  for (int i = 0; i < n; ++i) {
    const int l = g.node_labels[i];
    if (l == -1) {
      for (int c = 0; c < label_vocab; ++c)
        vals[static_cast<std::size_t>(i) * label_vocab + c] = unlabeled_constant;
    } else if (l >= 0 && l < label_vocab) {
      vals[static_cast<std::size_t>(i) * label_vocab + l] = 1.0;
    } else {
      throw std::invalid_argument("initial_features: node " + std::to_string(i) + " of graph '" +
                                  g.id + "' has label " + std::to_string(l) +
                                  " outside vocabulary of size " + std::to_string(label_vocab));
    }
  }
  return Tensor::from_values(n, label_vocab, std::move(vals));
}

Tensor pad_embeddings(const Tensor& h1, int n2, const Tensor& pad_row) {
  if (h1.rows() > n2)
    throw std::invalid_argument("pad_embeddings: embedding has more rows than the target size");
  if (pad_row.rows() != 1 || pad_row.cols() != h1.cols())
    throw std::invalid_argument("pad_embeddings: pad row must be 1 x d");
  return pad_rows(h1, n2, pad_row);
}

Tensor gumbel_sinkhorn(const Tensor& m, double tau, int iters, bool noise,
                       std::mt19937_64* rng, int* rounds_out) {
  const int n = m.rows();
  if (n != m.cols()) throw std::invalid_argument("gumbel_sinkhorn: matrix must be square");
  if (n < 1) throw std::invalid_argument("gumbel_sinkhorn: matrix must be non-empty");
  if (!(tau > 0.0)) throw std::invalid_argument("gumbel_sinkhorn: tau must be positive");
  if (iters < 1) throw std::invalid_argument("gumbel_sinkhorn: iters must be >= 1");
  if (noise && rng == nullptr)
    throw std::invalid_argument("gumbel_sinkhorn: noise requested without an rng");

  Tensor base = m;
  if (noise) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> g(static_cast<std::size_t>(n) * n);
    for (auto& x : g) {
      double u = unif(*rng);
      u = std::max(u, 1e-300);
      x = -std::log(-std::log(u));
    }
    base = add(m, Tensor::from_values(n, n, std::move(g)));
  }

  // Subtracting the detached per-row max cancels in the first row
  // normalization, so the result is unchanged while exp stays in range.
  std::vector<double> shift(static_cast<std::size_t>(n) * n);
  {
    const auto& v = base.values();
    for (int i = 0; i < n; ++i) {
      double mx = v[static_cast<std::size_t>(i) * n];
      for (int j = 1; j < n; ++j)
        mx = std::max(mx, v[static_cast<std::size_t>(i) * n + j]);
      for (int j = 0; j < n; ++j) shift[static_cast<std::size_t>(i) * n + j] = -mx;
    }
  }
  Tensor scaled = scalar_mul(add(base, Tensor::from_values(n, n, std::move(shift))), 1.0 / tau);
  Tensor s = exp(floor_exponent(scaled));

  int round = 0;
  while (true) {
    s = row_normalize(s);
    s = col_normalize(s);
    ++round;
    if (round < iters) continue;
    if (max_marginal_deviation(s) <= kDoublyStochasticTol) break;
    if (round >= kSinkhornMaxRounds)
      throw std::runtime_error(
          "gumbel_sinkhorn: marginals did not reach tolerance " +
          std::to_string(kDoublyStochasticTol) + " within " +
          std::to_string(kSinkhornMaxRounds) +
          " rounds; the scaled input is too extreme (consider a larger tau)");
  }
  if (rounds_out != nullptr) *rounds_out = round;
  return s;
}

std::vector<int> harden(const std::vector<double>& soft, int n) {
  return max_assignment(soft, n);
}

// ---- GnaModel ----------------------------------------------------------------

Tensor GnaModel::add_param(const std::string& name, int rows, int cols, double init_bound,
                           std::mt19937_64& rng) {
  Tensor t = Tensor::zeros(rows, cols, /*requires_grad=*/true);
  if (init_bound > 0.0) {
    std::uniform_real_distribution<double> unif(-init_bound, init_bound);
    for (auto& v : t.values()) v = unif(rng);
  }
  t.set_name(name);
  params_.push_back(t);
  names_.push_back(name);
  return t;
}

GnaModel::GnaModel(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  validate_config(cfg_);
  std::mt19937_64 rng(seed);
  const int d = cfg_.embed_dim();

  int in = cfg_.label_vocab;
  for (std::size_t k = 0; k < cfg_.gin_dims.size(); ++k) {
    const int out = cfg_.gin_dims[k];
    const std::string p = "gin." + std::to_string(k) + ".";
    add_param(p + "eps", 1, 1, 0.0, rng);
    add_param(p + "lin1.weight", in, out, 1.0 / std::sqrt(in), rng);
    add_param(p + "lin1.bias", 1, out, 1.0 / std::sqrt(in), rng);
    add_param(p + "lin2.weight", out, out, 1.0 / std::sqrt(out), rng);
    add_param(p + "lin2.bias", 1, out, 1.0 / std::sqrt(out), rng);
    in = out;
  }

  for (int c = 0; c < cfg_.cost_layers; ++c)
    add_param("cost.w." + std::to_string(c), d, d, 1.0 / std::sqrt(d), rng);
  for (int c = 0; c < cfg_.cost_layers; ++c)
    add_param("cost.fuse." + std::to_string(c), 1, 1, 1.0 / std::sqrt(cfg_.cost_layers), rng);

  add_param("lrl.lin1.weight", d, d, 1.0 / std::sqrt(d), rng);
  add_param("lrl.lin1.bias", 1, d, 1.0 / std::sqrt(d), rng);
  add_param("lrl.lin2.weight", d, d, 1.0 / std::sqrt(d), rng);
  add_param("lrl.lin2.bias", 1, d, 1.0 / std::sqrt(d), rng);

  for (int k = 0; k < cfg_.ntn_slices; ++k)
    add_param("ntn.t." + std::to_string(k), d, d, 1.0 / std::sqrt(d), rng);
  add_param("ntn.v", 2 * d, cfg_.ntn_slices, 1.0 / std::sqrt(2.0 * d), rng);
  add_param("ntn.b", 1, cfg_.ntn_slices, 0.0, rng);
  add_param("ntn.w", cfg_.ntn_slices, 1, 1.0 / std::sqrt(cfg_.ntn_slices), rng);
}

Tensor GnaModel::param(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return params_[i];
  throw std::invalid_argument("model: unknown parameter '" + name + "'");
}

void GnaModel::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void GnaModel::set_param_values(const std::string& name, const std::vector<double>& values) {
  Tensor t = param(name);
  if (values.size() != t.size())
    throw std::invalid_argument("model: parameter '" + name + "' expects " +
                                std::to_string(t.size()) + " values, got " +
                                std::to_string(values.size()));
  t.values() = values;
}

Tensor GnaModel::gin_encode(const Graph& g) const {
  g.validate();
  const int n = g.num_nodes();
  const auto adj = g.adjacency_matrix();
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(n) * n);
  for (const auto& row : adj) flat.insert(flat.end(), row.begin(), row.end());
  Tensor a = Tensor::from_values(n, n, std::move(flat));

  Tensor h = initial_features(g, cfg_.label_vocab, cfg_.unlabeled_constant);
  for (std::size_t k = 0; k < cfg_.gin_dims.size(); ++k) {
    const std::string p = "gin." + std::to_string(k) + ".";
    Tensor one_plus_eps = add(param(p + "eps"), Tensor::scalar(1.0));
    Tensor agg = add(scale(h, one_plus_eps), matmul(a, h));
    Tensor hidden = relu(add_rowvec(matmul(agg, param(p + "lin1.weight")), param(p + "lin1.bias")));
    h = add_rowvec(matmul(hidden, param(p + "lin2.weight")), param(p + "lin2.bias"));
  }
  return h;
}

Tensor GnaModel::lrl(const Tensor& h) const {
  Tensor hidden = relu(add_rowvec(matmul(h, param("lrl.lin1.weight")), param("lrl.lin1.bias")));
  return add_rowvec(matmul(hidden, param("lrl.lin2.weight")), param("lrl.lin2.bias"));
}

Tensor GnaModel::ntn_bias(const Tensor& hg1, const Tensor& hg2) const {
  Tensor slices;
  for (int k = 0; k < cfg_.ntn_slices; ++k) {
    Tensor sk = matmul(matmul(hg1, param("ntn.t." + std::to_string(k))), transpose(hg2));
    slices = (k == 0) ? sk : concat_cols(slices, sk);
  }
  Tensor vpart = matmul(concat_cols(hg1, hg2), param("ntn.v"));
  Tensor act = relu(add(add(slices, vpart), param("ntn.b")));
  return matmul(act, param("ntn.w"));
}

GnaModel::ForwardPieces GnaModel::forward_pieces(const Graph& g1, const Graph& g2, Mode mode,
                                                 std::mt19937_64* rng) const {
  const int n1 = g1.num_nodes();
  const int n2 = g2.num_nodes();
  if (n1 > n2)
    throw std::invalid_argument("model forward: expected |V1| <= |V2| (got " +
                                std::to_string(n1) + " > " + std::to_string(n2) + ")");

  Tensor h1 = gin_encode(g1);
  Tensor h2 = gin_encode(g2);
  Tensor hg1 = mean_rows(h1);
  Tensor hg2 = mean_rows(h2);

  // Cost branch: padded rows carry the graph embedding so deleting a node has
  // a learned price; the ablation replaces them with zeros.
  Tensor cost_pad = cfg_.no_add_delete_cost ? Tensor::zeros(1, h1.cols()) : hg1;
  Tensor h1_cost = pad_embeddings(h1, n2, cost_pad);
  Tensor weff;
  for (int c = 0; c < cfg_.cost_layers; ++c) {
    Tensor term = scale(param("cost.w." + std::to_string(c)),
                        param("cost.fuse." + std::to_string(c)));
    weff = (c == 0) ? term : add(weff, term);
  }
  Tensor cost = matmul(matmul(h1_cost, weff), transpose(h2));

  // Matching branch.
  Tensor h1_match = pad_embeddings(h1, n2, hg1);
  Tensor mraw = matmul(lrl(h1_match), transpose(lrl(h2)));
  Tensor matching;
  if (cfg_.no_gumbel_sinkhorn) {
    // Row-softmax fallback: same temperature, no noise, no column balancing.
    std::vector<double> shift(static_cast<std::size_t>(n2) * n2);
    const auto& v = mraw.values();
    for (int i = 0; i < n2; ++i) {
      double mx = v[static_cast<std::size_t>(i) * n2];
      for (int j = 1; j < n2; ++j) mx = std::max(mx, v[static_cast<std::size_t>(i) * n2 + j]);
      for (int j = 0; j < n2; ++j) shift[static_cast<std::size_t>(i) * n2 + j] = -mx;
    }
    Tensor shifted = add(mraw, Tensor::from_values(n2, n2, std::move(shift)));
    matching = row_normalize(exp(scalar_mul(shifted, 1.0 / cfg_.tau)));
  } else {
    matching = gumbel_sinkhorn(mraw, cfg_.tau, cfg_.sinkhorn_iters, mode == Mode::Train, rng);
  }

  Tensor interaction = sum(elementwise_mul(matching, cost));
  Tensor score = sigmoid(add(interaction, ntn_bias(hg1, hg2)));
  return ForwardPieces{cost, matching, score};
}

Tensor GnaModel::forward_score(const Graph& g1, const Graph& g2, Mode mode,
                               std::mt19937_64* rng) const {
  return forward_pieces(g1, g2, mode, rng).score;
}

Tensor GnaModel::matching_logits(const Graph& g1, const Graph& g2) const {
  const int n1 = g1.num_nodes();
  const int n2 = g2.num_nodes();
  if (n1 > n2)
    throw std::invalid_argument("model forward: expected |V1| <= |V2| (got " +
                                std::to_string(n1) + " > " + std::to_string(n2) + ")");
  Tensor h1 = gin_encode(g1);
  Tensor h1_match = pad_embeddings(h1, n2, mean_rows(h1));
  return matmul(lrl(h1_match), transpose(lrl(gin_encode(g2))));
}

Prediction GnaModel::predict(const GraphPair& pair, Mode mode, std::mt19937_64* rng) const {
  ForwardPieces pieces = forward_pieces(pair.g1, pair.g2, mode, rng);
  const int n1 = pair.g1.num_nodes();
  const int n2 = pair.g2.num_nodes();

  Prediction out;
  out.score = pieces.score.item();
  out.report.n1 = n1;
  out.report.n2 = n2;
  out.report.cost_matrix = pieces.cost.values();
  out.report.soft_matching = pieces.matching.values();
  out.report.hard_permutation = harden(out.report.soft_matching, n2);
  out.report.predicted_score = out.score;
  out.report.predicted_ged = denormalize_score(out.score, pair.g1, pair.g2);

  for (int i = 0; i < n2; ++i) {
    const int j = out.report.hard_permutation[i];
    NodeOp op;
    op.g2_node = j;
    op.g2_label = pair.g2.node_labels[j];
    if (i < n1) {
      op.g1_node = i;
      op.g1_label = pair.g1.node_labels[i];
      op.kind = (op.g1_label == op.g2_label) ? NodeOp::Kind::Match : NodeOp::Kind::Substitute;
    } else {
      op.kind = NodeOp::Kind::Insert;
    }
    out.report.node_ops.push_back(op);
  }
  return out;
}

// ---- checkpoint --------------------------------------------------------------

namespace {

nlohmann::json config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"label_vocab", cfg.label_vocab},
                        {"gin_dims", cfg.gin_dims},
                        {"cost_layers", cfg.cost_layers},
                        {"ntn_slices", cfg.ntn_slices},
                        {"tau", cfg.tau},
                        {"sinkhorn_iters", cfg.sinkhorn_iters},
                        {"unlabeled_constant", cfg.unlabeled_constant},
                        {"no_gumbel_sinkhorn", cfg.no_gumbel_sinkhorn},
                        {"no_add_delete_cost", cfg.no_add_delete_cost}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.label_vocab = j.at("label_vocab").get<int>();
  cfg.gin_dims = j.at("gin_dims").get<std::vector<int>>();
  cfg.cost_layers = j.at("cost_layers").get<int>();
  cfg.ntn_slices = j.at("ntn_slices").get<int>();
  cfg.tau = j.at("tau").get<double>();
  cfg.sinkhorn_iters = j.at("sinkhorn_iters").get<int>();
  cfg.unlabeled_constant = j.at("unlabeled_constant").get<double>();
  cfg.no_gumbel_sinkhorn = j.at("no_gumbel_sinkhorn").get<bool>();
  cfg.no_add_delete_cost = j.at("no_add_delete_cost").get<bool>();
  return cfg;
}

}  // namespace

void save_checkpoint(const std::string& path, const GnaModel& model) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : model.parameters()) {
    params.push_back(nlohmann::json{{"name", p.name()},
                                    {"rows", p.rows()},
                                    {"cols", p.cols()},
                                    {"values", p.values()}});
  }
  nlohmann::json j{{"format", "gna-checkpoint"},
                   {"version", 1},
                   {"config", config_to_json(model.config())},
                   {"params", std::move(params)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("checkpoint: failed writing '" + path + "'");
}

GnaModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.value("format", "") != "gna-checkpoint")
    throw std::runtime_error("checkpoint: '" + path + "' has an unrecognized format tag");
  if (j.value("version", 0) != 1)
    throw std::runtime_error("checkpoint: '" + path + "' has an unsupported version");

  GnaModel model(config_from_json(j.at("config")), /*seed=*/0);
  std::size_t applied = 0;
  for (const auto& p : j.at("params")) {
    const std::string name = p.at("name").get<std::string>();
    Tensor t = model.param(name);
    if (p.at("rows").get<int>() != t.rows() || p.at("cols").get<int>() != t.cols())
      throw std::runtime_error("checkpoint: parameter '" + name + "' has mismatched shape");
    model.set_param_values(name, p.at("values").get<std::vector<double>>());
    ++applied;
  }
  if (applied != model.parameters().size())
    throw std::runtime_error("checkpoint: '" + path + "' is missing parameters (" +
                             std::to_string(applied) + " of " +
                             std::to_string(model.parameters().size()) + ")");
  return model;
}

}  // namespace gna
