#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ucdrd {

using Matrix = Eigen::MatrixXd;

struct DimensionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ContractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// One node of the backward graph. Holds the value, the (lazily allocated)
/// gradient accumulator and, while a graph is alive, the edges and the
/// backward rule that pushes this node's gradient into its parents.
struct TensorData {
  Matrix value;
  Matrix grad;  // empty until first backward touches this node
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorData>> parents;
  std::function<void(TensorData&)> backward_fn;

  bool in_graph() const { return requires_grad || !parents.empty(); }
  Matrix& grad_ref() {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    return grad;
  }
};

}  // namespace detail

/// Dense 2-d tensor of doubles with reverse-mode autodiff. Value semantics on
/// the handle; the payload is shared, so copies alias the same storage.
/// Vectors are 1xN or Nx1 matrices, scalars 1x1.
class Tensor {
 public:
  Tensor() : d_(std::make_shared<detail::TensorData>()) {}
  explicit Tensor(Matrix value, bool requires_grad = false)
      : d_(std::make_shared<detail::TensorData>()) {
    d_->value = std::move(value);
    d_->requires_grad = requires_grad;
  }
  static Tensor scalar(double v) {
    Matrix m(1, 1);
    m(0, 0) = v;
    return Tensor(std::move(m));
  }
  static Tensor zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad = false) {
    return Tensor(Matrix::Zero(rows, cols), requires_grad);
  }

  Eigen::Index rows() const { return d_->value.rows(); }
  Eigen::Index cols() const { return d_->value.cols(); }
  Eigen::Index size() const { return d_->value.size(); }
  bool is_scalar() const { return rows() == 1 && cols() == 1; }
  double item() const;

  const Matrix& value() const { return d_->value; }
  Matrix& value() { return d_->value; }
  const Matrix& grad() const { return d_->grad_ref(); }
  bool requires_grad() const { return d_->requires_grad; }
  void set_requires_grad(bool b) { d_->requires_grad = b; }
  void zero_grad() { d_->grad = Matrix::Zero(rows(), cols()); }

  /// Copy of the value with no graph attached.
  Tensor detach() const { return Tensor(d_->value); }

  detail::TensorData* data() const { return d_.get(); }
  std::shared_ptr<detail::TensorData> shared() const { return d_; }

 private:
  std::shared_ptr<detail::TensorData> d_;
};

/// Runs reverse-mode accumulation from a scalar loss. Gradients add into any
/// grad already present (callers zero between steps). The graph reachable
/// from `loss` is freed afterwards; one backward per graph.
void backward(const Tensor& loss);

// --- core ops -------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor div(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);
Tensor relu(const Tensor& a);
Tensor exp_op(const Tensor& a);
Tensor log_op(const Tensor& a);
Tensor sqrt_op(const Tensor& a);
Tensor clamp_min(const Tensor& a, double lo);

/// Row-stabilized softmax; rows sum to 1.
Tensor softmax_rows(const Tensor& x);

Tensor sum(const Tensor& a);                       // -> 1x1
Tensor rowwise_sum(const Tensor& a);               // m x n -> m x 1
Tensor mean_rows(const Tensor& a);                 // m x n -> 1 x n
Tensor max_pool_rows(const Tensor& a);             // m x n -> 1 x n, grad to first argmax
Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor stack_rows(std::span<const Tensor> rows);   // k row vectors -> k x n

// Broadcast helpers: M is m x n, r is 1 x n, c is m x 1.
Tensor add_row_broadcast(const Tensor& m, const Tensor& r);
Tensor sub_col_broadcast(const Tensor& m, const Tensor& c);
Tensor div_row_broadcast(const Tensor& m, const Tensor& r);
Tensor div_col_broadcast(const Tensor& m, const Tensor& c);

/// Cosine similarity of two equally shaped vectors, eps = 1e-12 in the
/// denominator so zero vectors stay finite.
Tensor cosine_similarity(const Tensor& u, const Tensor& v);

/// B x d features -> B x B cosine similarity matrix (graph-recorded).
Tensor cosine_matrix(const Tensor& a, const Tensor& b);

inline constexpr double kCosineEps = 1e-12;

}  // namespace ucdrd
