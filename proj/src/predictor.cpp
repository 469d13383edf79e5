#include "ucdrd/predictor.hpp"

#include <cmath>
#include <random>

namespace ucdrd {

ClassifierParams init_classifier(int dim, int num_classes, std::uint64_t seed) {
  if (num_classes < 2)
    throw ContractError("init_classifier: need at least 2 classes");
  std::mt19937_64 rng(seed);
  double limit = std::sqrt(6.0 / static_cast<double>(dim + num_classes));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix w(dim, num_classes);
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
  return ClassifierParams{Tensor(std::move(w), true),
                          Tensor(Matrix::Zero(1, num_classes), true)};
}

Tensor predict(const Tensor& embedding, const ClassifierParams& params) {
  if (embedding.rows() != 1)
    throw DimensionError("predict: embedding must be a row vector");
  return softmax_rows(add(matmul(embedding, params.w), params.b));
}

Tensor predict_batch(const Tensor& features, const ClassifierParams& params) {
  return softmax_rows(add_row_broadcast(matmul(features, params.w), params.b));
}

Tensor cross_entropy_source(const Tensor& features,
                            const std::vector<int>& labels,
                            const ClassifierParams& params) {
  const Eigen::Index b = features.rows();
  if (b == 0) throw ContractError("cross_entropy_source: empty batch");
  const int nc = params.num_classes();
  Matrix onehot = Matrix::Zero(b, nc);
  for (Eigen::Index i = 0; i < b; ++i) {
    int y = labels[i];
    if (y < 0 || y >= nc)
      throw ContractError("cross_entropy_source: label " + std::to_string(y) +
                          " outside [0," + std::to_string(nc) + ")");
    onehot(i, y) = 1.0;
  }
  Tensor probs = clamp_min(predict_batch(features, params), kProbClamp);
  return scale(sum(mul(log_op(probs), Tensor(onehot))),
               -1.0 / static_cast<double>(b));
}

Tensor total_loss(const Tensor& ce, const Tensor& cl, const Tensor& ca,
                  const LossWeights& weights) {
  return add(add(scale(ce, weights.gamma1), scale(cl, weights.gamma2)),
             scale(ca, weights.gamma3));
}

int infer_label(const Tensor& embedding, const ClassifierParams& params) {
  Matrix p = predict(embedding, params).value();
  int best = 0;
  for (Eigen::Index j = 1; j < p.cols(); ++j)
    if (p(0, j) > p(0, best)) best = static_cast<int>(j);
  return best;
}

}  // namespace ucdrd
