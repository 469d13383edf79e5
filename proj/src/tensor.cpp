#include "ucdrd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace ucdrd {

namespace {

using detail::TensorData;
using NodePtr = std::shared_ptr<TensorData>;

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

/// Builds the result tensor; attaches graph edges only when some input is
/// graph-recorded.
Tensor make_op(Matrix value, std::vector<Tensor> inputs,
               std::function<void(TensorData&)> backward_fn) {
  Tensor out(std::move(value));
  bool track = false;
  for (const auto& t : inputs)
    if (t.data()->in_graph()) track = true;
  if (track) {
    auto* d = out.data();
    d->parents.reserve(inputs.size());
    for (const auto& t : inputs) d->parents.push_back(t.shared());
    d->backward_fn = std::move(backward_fn);
  }
  return out;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) +
                         " vs " + shape_str(b));
}

}  // namespace

double Tensor::item() const {
  if (!is_scalar())
    throw ContractError("item(): tensor is " + std::to_string(rows()) + "x" +
                        std::to_string(cols()) + ", expected 1x1");
  return d_->value(0, 0);
}

void backward(const Tensor& loss) {
  if (!loss.is_scalar())
    throw ContractError("backward: loss must be a 1x1 scalar, got " +
                        std::to_string(loss.rows()) + "x" +
                        std::to_string(loss.cols()));

  // Reverse topological order via iterative DFS.
  std::vector<NodePtr> topo;
  std::unordered_set<TensorData*> visited;
  struct Frame {
    NodePtr node;
    size_t next_child = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.shared()});
  visited.insert(loss.data());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->parents.size()) {
      NodePtr child = f.node->parents[f.next_child++];
      if (visited.insert(child.get()).second) stack.push_back({std::move(child)});
    } else {
      topo.push_back(f.node);
      stack.pop_back();
    }
  }

  loss.data()->grad_ref()(0, 0) += 1.0;
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    auto& node = **it;
    if (node.backward_fn) node.backward_fn(node);
  }
  // Free the graph; parameter grads stay.
  for (auto& node : topo) {
    node->parents.clear();
    node->backward_fn = nullptr;
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree, " + shape_str(a) +
                         " x " + shape_str(b));
  Matrix av = a.value(), bv = b.value();
  return make_op(av * bv, {a, b}, [av, bv](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad * bv.transpose();
    self.parents[1]->grad_ref() += av.transpose() * self.grad;
  });
}

Tensor transpose(const Tensor& a) {
  return make_op(a.value().transpose(), {a}, [](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad.transpose();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  return make_op(a.value() + b.value(), {a, b}, [](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad;
    self.parents[1]->grad_ref() += self.grad;
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  return make_op(a.value() - b.value(), {a, b}, [](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad;
    self.parents[1]->grad_ref() -= self.grad;
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  Matrix av = a.value(), bv = b.value();
  return make_op(av.cwiseProduct(bv), {a, b}, [av, bv](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad.cwiseProduct(bv);
    self.parents[1]->grad_ref() += self.grad.cwiseProduct(av);
  });
}

Tensor div(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "div");
  Matrix av = a.value(), bv = b.value();
  return make_op(av.cwiseQuotient(bv), {a, b}, [av, bv](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad.cwiseQuotient(bv);
    self.parents[1]->grad_ref() -=
        self.grad.cwiseProduct(av).cwiseQuotient(bv.cwiseProduct(bv));
  });
}

Tensor scale(const Tensor& a, double c) {
  return make_op(a.value() * c, {a}, [c](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad * c;
  });
}

Tensor add_const(const Tensor& a, double c) {
  return make_op(a.value().array() + c, {a}, [](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad;
  });
}

Tensor relu(const Tensor& a) {
  Matrix av = a.value();
  return make_op(av.cwiseMax(0.0), {a}, [av](TensorData& self) {
    self.parents[0]->grad_ref() +=
        self.grad.cwiseProduct((av.array() > 0.0).cast<double>().matrix());
  });
}

Tensor exp_op(const Tensor& a) {
  Matrix out = a.value().array().exp();
  return make_op(out, {a}, [out](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad.cwiseProduct(out);
  });
}

Tensor log_op(const Tensor& a) {
  Matrix av = a.value();
  return make_op(av.array().log(), {a}, [av](TensorData& self) {
    self.parents[0]->grad_ref() += self.grad.cwiseQuotient(av);
  });
}

Tensor sqrt_op(const Tensor& a) {
  Matrix out = a.value().array().sqrt();
  return make_op(out, {a}, [out](TensorData& self) {
    self.parents[0]->grad_ref() +=
        self.grad.cwiseQuotient(2.0 * out.cwiseMax(1e-300));
  });
}

Tensor clamp_min(const Tensor& a, double lo) {
  Matrix av = a.value();
  return make_op(av.cwiseMax(lo), {a}, [av, lo](TensorData& self) {
    self.parents[0]->grad_ref() +=
        self.grad.cwiseProduct((av.array() > lo).cast<double>().matrix());
  });
}

Tensor softmax_rows(const Tensor& x) {
  if (!x.value().allFinite())
    throw NumericError("softmax_rows: non-finite input");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::ArrayXd row = x.value().row(i).array();
    row -= row.maxCoeff();
    Eigen::ArrayXd e = row.exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return make_op(out, {x}, [out](TensorData& self) {
    Matrix dx(out.rows(), out.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double dot = self.grad.row(i).dot(out.row(i));
      dx.row(i) = out.row(i).cwiseProduct(
          (self.grad.row(i).array() - dot).matrix());
    }
    self.parents[0]->grad_ref() += dx;
  });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  Eigen::Index r = a.rows(), c = a.cols();
  return make_op(out, {a}, [r, c](TensorData& self) {
    self.parents[0]->grad_ref().array() += self.grad(0, 0);
  });
}

Tensor rowwise_sum(const Tensor& a) {
  Matrix out = a.value().rowwise().sum();
  return make_op(out, {a}, [](TensorData& self) {
    auto& g = self.parents[0]->grad_ref();
    g += self.grad * Matrix::Ones(1, g.cols());
  });
}

Tensor mean_rows(const Tensor& a) {
  double inv = 1.0 / static_cast<double>(a.rows());
  Matrix out = a.value().colwise().mean();
  return make_op(out, {a}, [inv](TensorData& self) {
    auto& g = self.parents[0]->grad_ref();
    g += (Matrix::Ones(g.rows(), 1) * self.grad) * inv;
  });
}

Tensor max_pool_rows(const Tensor& a) {
  Matrix out(1, a.cols());
  std::vector<Eigen::Index> argmax(a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < a.rows(); ++i)
      if (a.value()(i, j) > a.value()(best, j)) best = i;  // first index on ties
    argmax[j] = best;
    out(0, j) = a.value()(best, j);
  }
  return make_op(out, {a}, [argmax](TensorData& self) {
    auto& g = self.parents[0]->grad_ref();
    for (Eigen::Index j = 0; j < g.cols(); ++j)
      g(argmax[j], j) += self.grad(0, j);
  });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows())
    throw DimensionError("concat_cols: row counts differ, " + shape_str(a) +
                         " vs " + shape_str(b));
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  Eigen::Index ac = a.cols();
  return make_op(out, {a, b}, [ac](TensorData& self) {
    auto& ga = self.parents[0]->grad_ref();
    auto& gb = self.parents[1]->grad_ref();
    ga += self.grad.leftCols(ac);
    gb += self.grad.rightCols(self.grad.cols() - ac);
  });
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ContractError("stack_rows: empty input");
  Eigen::Index n = rows[0].cols();
  Matrix out(static_cast<Eigen::Index>(rows.size()), n);
  std::vector<Tensor> inputs;
  inputs.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].rows() != 1 || rows[i].cols() != n)
      throw DimensionError("stack_rows: row " + std::to_string(i) +
                           " has shape " + shape_str(rows[i]));
    out.row(static_cast<Eigen::Index>(i)) = rows[i].value();
    inputs.push_back(rows[i]);
  }
  return make_op(std::move(out), std::move(inputs), [](TensorData& self) {
    for (size_t i = 0; i < self.parents.size(); ++i)
      self.parents[i]->grad_ref() +=
          self.grad.row(static_cast<Eigen::Index>(i));
  });
}

Tensor add_row_broadcast(const Tensor& m, const Tensor& r) {
  if (r.rows() != 1 || r.cols() != m.cols())
    throw DimensionError("add_row_broadcast: " + shape_str(m) + " + " +
                         shape_str(r));
  return make_op(m.value().rowwise() + r.value().row(0), {m, r},
                 [](TensorData& self) {
                   self.parents[0]->grad_ref() += self.grad;
                   self.parents[1]->grad_ref() += self.grad.colwise().sum();
                 });
}

Tensor sub_col_broadcast(const Tensor& m, const Tensor& c) {
  if (c.cols() != 1 || c.rows() != m.rows())
    throw DimensionError("sub_col_broadcast: " + shape_str(m) + " - " +
                         shape_str(c));
  return make_op(m.value().colwise() - c.value().col(0), {m, c},
                 [](TensorData& self) {
                   self.parents[0]->grad_ref() += self.grad;
                   self.parents[1]->grad_ref() -= self.grad.rowwise().sum();
                 });
}

Tensor div_row_broadcast(const Tensor& m, const Tensor& r) {
  if (r.rows() != 1 || r.cols() != m.cols())
    throw DimensionError("div_row_broadcast: " + shape_str(m) + " / " +
                         shape_str(r));
  Matrix mv = m.value(), rv = r.value();
  Matrix out = mv.array().rowwise() / rv.row(0).array();
  return make_op(out, {m, r}, [mv, rv](TensorData& self) {
    self.parents[0]->grad_ref() +=
        (self.grad.array().rowwise() / rv.row(0).array()).matrix();
    self.parents[1]->grad_ref() -=
        ((self.grad.cwiseProduct(mv)).array().rowwise() /
         (rv.row(0).array() * rv.row(0).array()))
            .matrix()
            .colwise()
            .sum();
  });
}

Tensor div_col_broadcast(const Tensor& m, const Tensor& c) {
  if (c.cols() != 1 || c.rows() != m.rows())
    throw DimensionError("div_col_broadcast: " + shape_str(m) + " / " +
                         shape_str(c));
  Matrix mv = m.value(), cv = c.value();
  Matrix out = mv.array().colwise() / cv.col(0).array();
  return make_op(out, {m, c}, [mv, cv](TensorData& self) {
    self.parents[0]->grad_ref() +=
        (self.grad.array().colwise() / cv.col(0).array()).matrix();
    self.parents[1]->grad_ref() -=
        ((self.grad.cwiseProduct(mv)).array().colwise() /
         (cv.col(0).array() * cv.col(0).array()))
            .matrix()
            .rowwise()
            .sum();
  });
}

Tensor cosine_similarity(const Tensor& u, const Tensor& v) {
  check_same_shape(u, v, "cosine_similarity");
  Tensor dot = sum(mul(u, v));
  Tensor nu = sqrt_op(sum(mul(u, u)));
  Tensor nv = sqrt_op(sum(mul(v, v)));
  return div(dot, add_const(mul(nu, nv), kCosineEps));
}

Tensor cosine_matrix(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols())
    throw DimensionError("cosine_matrix: feature dims differ, " + shape_str(a) +
                         " vs " + shape_str(b));
  Tensor dots = matmul(a, transpose(b));
  Tensor na = sqrt_op(rowwise_sum(mul(a, a)));  // m x 1
  Tensor nb = sqrt_op(rowwise_sum(mul(b, b)));  // n x 1
  Tensor denom = add_const(matmul(na, transpose(nb)), kCosineEps);
  return div(dots, denom);
}

}  // namespace ucdrd
