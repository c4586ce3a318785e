#include "gna/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace gna {

namespace {

constexpr double kNormClamp = 1e-30;  // denominator floor for row/col normalize

void check_finite(const TensorNode& n, const char* op) {
  for (double v : n.value) {
    if (!std::isfinite(v)) {
      std::ostringstream oss;
      oss << "non-finite value produced by op '" << op << "' (" << n.rows << "x" << n.cols << ")";
      throw std::runtime_error(oss.str());
    }
  }
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  std::ostringstream oss;
  oss << "shape mismatch in op '" << op << "': " << a.rows() << "x" << a.cols() << " vs "
      << b.rows() << "x" << b.cols();
  throw std::invalid_argument(oss.str());
}

TensorNodePtr make_node(int rows, int cols) {
  auto n = std::make_shared<TensorNode>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  return n;
}

// Wires parents / requires_grad and runs the finite check.
Tensor finish(TensorNodePtr out, const char* op, std::vector<TensorNodePtr> parents,
              std::function<void(TensorNode&)> backward_fn) {
  bool rg = false;
  for (const auto& p : parents) rg = rg || p->requires_grad;
  out->requires_grad = rg;
  if (rg) {
    out->parents = std::move(parents);
    out->backward_fn = std::move(backward_fn);
  }
  check_finite(*out, op);
  return Tensor(std::move(out));
}

}  // namespace

void TensorNode::ensure_grad() {
  if (grad.empty()) grad.assign(value.size(), 0.0);
}

void TensorNode::zero_grad() {
  grad.assign(value.size(), 0.0);
}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  auto n = make_node(rows, cols);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::full(int rows, int cols, double fill, bool requires_grad) {
  auto n = make_node(rows, cols);
  n->value.assign(n->value.size(), fill);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_values(int rows, int cols, std::vector<double> values, bool requires_grad) {
  if (values.size() != static_cast<std::size_t>(rows) * cols)
    throw std::invalid_argument("Tensor::from_values: value count does not match shape");
  auto n = std::make_shared<TensorNode>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from_values(1, 1, {v}); }

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("Tensor::item: tensor is not 1x1");
  return node_->value[0];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const int m = a.rows(), k = a.cols(), n = b.cols();
  auto out = make_node(m, n);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  double* ov = out->value.data();
  for (int i = 0; i < m; ++i) {
    double* orow = ov + static_cast<std::size_t>(i) * n;
    const double* arow = av + static_cast<std::size_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double aik = arow[p];
      if (aik == 0.0) continue;
      const double* brow = bv + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += aik * brow[j];
    }
  }
  auto an = a.ptr(), bn = b.ptr();
  return finish(out, "matmul", {an, bn}, [an, bn, m, k, n](TensorNode& self) {
    // dA += G * B^T ; dB += A^T * G
    if (an->requires_grad) {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int p = 0; p < k; ++p) {
          double acc = 0.0;
          const double* grow = self.grad.data() + static_cast<std::size_t>(i) * n;
          const double* brow = bn->value.data() + static_cast<std::size_t>(p) * n;
          for (int j = 0; j < n; ++j) acc += grow[j] * brow[j];
          an->grad[static_cast<std::size_t>(i) * k + p] += acc;
        }
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int p = 0; p < k; ++p) {
        double* brow = bn->grad.data() + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
          const double aip = an->value[static_cast<std::size_t>(i) * k + p];
          if (aip == 0.0) continue;
          const double* grow = self.grad.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) brow[j] += aip * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  const int m = a.rows(), n = a.cols();
  auto out = make_node(n, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out->value[static_cast<std::size_t>(j) * m + i] = a.at(i, j);
  auto an = a.ptr();
  return finish(out, "transpose", {an}, [an, m, n](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i)
        an->grad[static_cast<std::size_t>(i) * n + j] += self.grad[static_cast<std::size_t>(j) * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("add", a, b);
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a.values()[i] + b.values()[i];
  auto an = a.ptr(), bn = b.ptr();
  return finish(out, "add", {an, bn}, [an, bn](TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
    }
  });
}

Tensor add_rowvec(const Tensor& a, const Tensor& b) {
  if (b.rows() != 1 || a.cols() != b.cols()) shape_error("add_rowvec", a, b);
  const int m = a.rows(), n = a.cols();
  auto out = make_node(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out->value[static_cast<std::size_t>(i) * n + j] = a.at(i, j) + b.at(0, j);
  auto an = a.ptr(), bn = b.ptr();
  return finish(out, "add_rowvec", {an, bn}, [an, bn, m, n](TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          bn->grad[j] += self.grad[static_cast<std::size_t>(i) * n + j];
    }
  });
}

Tensor scalar_mul(const Tensor& a, double c) {
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.values()[i] * c;
  auto an = a.ptr();
  return finish(out, "scalar_mul", {an}, [an, c](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
  });
}

Tensor scale(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) shape_error("scale", a, s);
  const double sv = s.values()[0];
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = a.values()[i] * sv;
  auto an = a.ptr(), sn = s.ptr();
  return finish(out, "scale", {an, sn}, [an, sn, sv](TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += sv * self.grad[i];
    }
    if (sn->requires_grad) {
      sn->ensure_grad();
      double acc = 0.0;
      for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * an->value[i];
      sn->grad[0] += acc;
    }
  });
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("elementwise_mul", a, b);
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a.values()[i] * b.values()[i];
  auto an = a.ptr(), bn = b.ptr();
  return finish(out, "elementwise_mul", {an, bn}, [an, bn](TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
}

Tensor relu(const Tensor& a) {
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = a.values()[i] > 0.0 ? a.values()[i] : 0.0;
  auto an = a.ptr();
  return finish(out, "relu", {an}, [an](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      if (an->value[i] > 0.0) an->grad[i] += self.grad[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i)
    out->value[i] = 1.0 / (1.0 + std::exp(-a.values()[i]));
  auto an = a.ptr();
  return finish(out, "sigmoid", {an}, [an](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double y = self.value[i];
      an->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor exp(const Tensor& a) {
  auto out = make_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = std::exp(a.values()[i]);
  auto an = a.ptr();
  return finish(out, "exp", {an}, [an](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      an->grad[i] += self.grad[i] * self.value[i];
  });
}

namespace {

// Shared kernel for row/col normalization. Denominators below kNormClamp are
// clamped and treated as constants in the backward pass.
Tensor normalize_impl(const Tensor& a, bool by_rows, const char* op) {
  const int m = a.rows(), n = a.cols();
  auto out = make_node(m, n);
  const int groups = by_rows ? m : n;
  auto sums = std::make_shared<std::vector<double>>(groups, 0.0);
  auto clamped = std::make_shared<std::vector<char>>(groups, 0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      (*sums)[by_rows ? i : j] += a.at(i, j);
  for (int g = 0; g < groups; ++g) {
    if ((*sums)[g] < kNormClamp) {
      (*sums)[g] = kNormClamp;
      (*clamped)[g] = 1;
    }
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out->value[static_cast<std::size_t>(i) * n + j] = a.at(i, j) / (*sums)[by_rows ? i : j];
  auto an = a.ptr();
  return finish(out, op, {an}, [an, sums, clamped, by_rows, m, n](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    // y_ij = x_ij / s_g. If the clamp was active, s is constant:
    //   dx_ij = g_ij / s.  Otherwise dx_ij = (g_ij - sum_k g_gk y_gk) / s_g.
    const int groups = by_rows ? m : n;
    std::vector<double> dot(groups, 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * n + j;
        dot[by_rows ? i : j] += self.grad[idx] * self.value[idx];
      }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const std::size_t idx = static_cast<std::size_t>(i) * n + j;
        const int g = by_rows ? i : j;
        const double corr = (*clamped)[g] ? 0.0 : dot[g];
        an->grad[idx] += (self.grad[idx] - corr) / (*sums)[g];
      }
  });
}

}  // namespace

Tensor row_normalize(const Tensor& a) { return normalize_impl(a, true, "row_normalize"); }
Tensor col_normalize(const Tensor& a) { return normalize_impl(a, false, "col_normalize"); }

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) shape_error("concat_cols", a, b);
  const int m = a.rows(), na = a.cols(), nb = b.cols();
  auto out = make_node(m, na + nb);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < na; ++j) out->value[static_cast<std::size_t>(i) * (na + nb) + j] = a.at(i, j);
    for (int j = 0; j < nb; ++j) out->value[static_cast<std::size_t>(i) * (na + nb) + na + j] = b.at(i, j);
  }
  auto an = a.ptr(), bn = b.ptr();
  return finish(out, "concat_cols", {an, bn}, [an, bn, m, na, nb](TensorNode& self) {
    for (int i = 0; i < m; ++i) {
      if (an->requires_grad) {
        an->ensure_grad();
        for (int j = 0; j < na; ++j)
          an->grad[static_cast<std::size_t>(i) * na + j] += self.grad[static_cast<std::size_t>(i) * (na + nb) + j];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int j = 0; j < nb; ++j)
          bn->grad[static_cast<std::size_t>(i) * nb + j] += self.grad[static_cast<std::size_t>(i) * (na + nb) + na + j];
      }
    }
  });
}

Tensor sum(const Tensor& a) {
  auto out = make_node(1, 1);
  double acc = 0.0;
  for (double v : a.values()) acc += v;
  out->value[0] = acc;
  auto an = a.ptr();
  return finish(out, "sum", {an}, [an](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < an->grad.size(); ++i) an->grad[i] += g;
  });
}

Tensor mean_rows(const Tensor& a) {
  const int m = a.rows(), n = a.cols();
  auto out = make_node(1, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out->value[j] += a.at(i, j);
  for (int j = 0; j < n; ++j) out->value[j] /= m;
  auto an = a.ptr();
  return finish(out, "mean_rows", {an}, [an, m, n](TensorNode& self) {
    if (!an->requires_grad) return;
    an->ensure_grad();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        an->grad[static_cast<std::size_t>(i) * n + j] += self.grad[j] / m;
  });
}

Tensor pad_rows(const Tensor& a, int target_rows, const Tensor& pad_row) {
  const int m = a.rows(), n = a.cols();
  if (target_rows < m)
    throw std::invalid_argument("pad_rows: target row count below input rows");
  if (pad_row.rows() != 1 || pad_row.cols() != n) shape_error("pad_rows", a, pad_row);
  auto out = make_node(target_rows, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out->value[static_cast<std::size_t>(i) * n + j] = a.at(i, j);
  for (int i = m; i < target_rows; ++i)
    for (int j = 0; j < n; ++j) out->value[static_cast<std::size_t>(i) * n + j] = pad_row.at(0, j);
  auto an = a.ptr(), pn = pad_row.ptr();
  return finish(out, "pad_rows", {an, pn}, [an, pn, m, n, target_rows](TensorNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          an->grad[static_cast<std::size_t>(i) * n + j] += self.grad[static_cast<std::size_t>(i) * n + j];
    }
    if (pn->requires_grad) {
      pn->ensure_grad();
      for (int i = m; i < target_rows; ++i)
        for (int j = 0; j < n; ++j)
          pn->grad[j] += self.grad[static_cast<std::size_t>(i) * n + j];
    }
  });
}

void backward(const Tensor& loss) {
  if (!loss.valid() || loss.size() != 1)
    throw std::invalid_argument("backward: loss must be a 1x1 scalar tensor");
  // Deterministic iterative post-order DFS over the recorded graph.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  struct Frame {
    TensorNode* node;
    std::size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node(), 0});
  visited.insert(loss.node());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TensorNode* p = f.node->parents[f.next_parent++].get();
      if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn && n->has_grad()) n->backward_fn(*n);
  }
}

AdamState::AdamState(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamState::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void AdamState::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    TensorNode* n = params_[pi].node();
    if (!n->has_grad()) {
      throw std::runtime_error("adam_step: parameter '" + n->name + "' has no gradient");
    }
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (std::size_t i = 0; i < n->value.size(); ++i) {
      const double g = n->grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      n->value[i] -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * n->value[i]);
    }
  }
}

}  // namespace gna
