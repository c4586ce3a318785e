#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace gna {

/// Dense 2-D tensor participating in a reverse-mode differentiation graph.
/// Scalars are 1x1, row vectors 1xN. All storage is row-major double.
///
/// Each operation records its parents and a pull-style backward closure, so
/// calling backward() on a scalar loss fills the grad buffers of every
/// reachable node. Values are checked for NaN/Inf after every op.
class TensorNode;
using TensorNodePtr = std::shared_ptr<TensorNode>;

class TensorNode {
 public:
  int rows = 0;
  int cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // allocated lazily, same size as value
  bool requires_grad = false;
  std::string name;  // set for named parameters, empty for intermediates

  std::vector<TensorNodePtr> parents;
  std::function<void(TensorNode&)> backward_fn;  // pushes this->grad into parents

  std::size_t size() const { return value.size(); }
  bool has_grad() const { return !grad.empty(); }
  void ensure_grad();   // allocate zero-filled grad buffer if absent
  void zero_grad();     // allocate if needed, then fill with zeros
};

/// Value-semantic handle to a node of the computation graph.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(TensorNodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(int rows, int cols, bool requires_grad = false);
  static Tensor full(int rows, int cols, double fill, bool requires_grad = false);
  static Tensor from_values(int rows, int cols, std::vector<double> values,
                            bool requires_grad = false);
  static Tensor scalar(double v);

  bool valid() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  std::size_t size() const { return node_->size(); }
  double at(int r, int c) const { return node_->value[static_cast<std::size_t>(r) * node_->cols + c]; }
  double& at(int r, int c) { return node_->value[static_cast<std::size_t>(r) * node_->cols + c]; }
  double item() const;  // value of a 1x1 tensor

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values() { return node_->value; }
  const std::vector<double>& grad() const { return node_->grad; }

  TensorNode* node() const { return node_.get(); }
  const TensorNodePtr& ptr() const { return node_; }

  void set_name(const std::string& n) { node_->name = n; }
  const std::string& name() const { return node_->name; }
  bool requires_grad() const { return node_->requires_grad; }
  void zero_grad() { node_->zero_grad(); }

 private:
  TensorNodePtr node_;
};

// ---- forward ops -----------------------------------------------------------
// Every op validates shapes (throwing std::invalid_argument naming the op) and
// checks the result for non-finite entries (throwing std::runtime_error).

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);            // same shape
Tensor add_rowvec(const Tensor& a, const Tensor& b);     // (m x n) + (1 x n)
Tensor scalar_mul(const Tensor& a, double c);            // constant scale
Tensor scale(const Tensor& a, const Tensor& s);          // s is 1x1, trainable scale
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor row_normalize(const Tensor& a);  // rows divided by row sums (clamped at 1e-30)
Tensor col_normalize(const Tensor& a);
Tensor concat_cols(const Tensor& a, const Tensor& b);    // same rows
Tensor sum(const Tensor& a);                             // -> 1x1
Tensor mean_rows(const Tensor& a);                       // column means -> 1 x n
Tensor pad_rows(const Tensor& a, int target_rows, const Tensor& pad_row);

/// Reverse-mode pass from a scalar loss. Gradients accumulate (+=) into the
/// grad buffers of all reachable nodes, so callers zero parameter grads first.
void backward(const Tensor& loss);

// ---- Adam ------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-4;  // decoupled
};

/// Per-parameter first/second moment state for Adam with decoupled weight decay.
class AdamState {
 public:
  AdamState(std::vector<Tensor> params, AdamConfig cfg);

  /// One optimizer step. Every parameter must have a populated grad buffer.
  void step();
  void zero_grad();

  long long step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Tensor>& params() const { return params_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig cfg_;
  long long step_ = 0;
};

}  // namespace gna
