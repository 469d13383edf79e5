#include "ucdrd/contrastive.hpp"

#include <cstdio>

namespace ucdrd {

namespace {

/// log(exp(l_ij) / sum_k m_ik exp(l_ik)) for every i,j given a 0/1
/// denominator mask; entries are only read where a positive mask selects
/// them, so masked-out columns carrying arbitrary values are harmless.
Tensor log_softmax_masked(const Tensor& logits, const Matrix& denom_mask) {
  Tensor masked_exp = mul(exp_op(logits), Tensor(denom_mask));
  Tensor denom = rowwise_sum(masked_exp);
  return sub_col_broadcast(logits, log_op(denom));
}

}  // namespace

Tensor supcon_in_domain(const FeatureBatch& batch,
                        const ContrastiveConfig& cfg) {
  const Eigen::Index b = batch.size();
  if (b < 2)
    throw ContractError("supcon_in_domain: batch size " + std::to_string(b) +
                        " < 2");

  Tensor logits = scale(cosine_matrix(batch.features, batch.features),
                        1.0 / cfg.tau);

  Matrix denom_mask = Matrix::Ones(b, b);
  Matrix pos_mask = Matrix::Zero(b, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = 0; j < b; ++j) {
      if (i == j && !cfg.include_self) continue;
      if (batch.labels[i] == batch.labels[j]) pos_mask(i, j) = 1.0;
    }
    if (!cfg.include_self) denom_mask(i, i) = 0.0;
  }

  Tensor log_probs = log_softmax_masked(logits, denom_mask);
  return scale(sum(mul(log_probs, Tensor(pos_mask))),
               -1.0 / static_cast<double>(b));
}

Tensor in_domain_loss(const FeatureBatch& source, const FeatureBatch& target,
                      const ContrastiveConfig& cfg) {
  return add(scale(supcon_in_domain(source, cfg), cfg.alpha1),
             scale(supcon_in_domain(target, cfg), cfg.alpha2));
}

Tensor cross_domain_instance(const FeatureBatch& anchors,
                             const FeatureBatch& contrasts,
                             const ContrastiveConfig& cfg) {
  const Eigen::Index a = anchors.size(), c = contrasts.size();
  if (a == 0 || c == 0)
    throw ContractError("cross_domain_instance: empty batch");

  Tensor logits = scale(cosine_matrix(anchors.features, contrasts.features),
                        1.0 / cfg.tau);
  Matrix pos_mask = Matrix::Zero(a, c);
  bool any_positive = false;
  for (Eigen::Index i = 0; i < a; ++i)
    for (Eigen::Index j = 0; j < c; ++j)
      if (anchors.labels[i] == contrasts.labels[j]) {
        pos_mask(i, j) = 1.0;
        any_positive = true;
      }
  if (!any_positive)
    std::fprintf(stderr,
                 "warning: cross_domain_instance: no class overlap between "
                 "anchor and contrast batches; loss contributes 0\n");

  Tensor log_probs = log_softmax_masked(logits, Matrix::Ones(a, c));
  return scale(sum(mul(log_probs, Tensor(pos_mask))),
               -1.0 / static_cast<double>(a));
}

Tensor prototype_loss(const FeatureBatch& target, const FeatureBatch& source,
                      int num_classes, const ContrastiveConfig& cfg) {
  const Eigen::Index bs = source.size(), bt = target.size();
  if (bt == 0) throw ContractError("prototype_loss: empty target batch");

  std::vector<int> counts(num_classes, 0);
  for (int y : source.labels) ++counts[y];

  // Differentiable class centers: selector row x source features.
  std::vector<Tensor> centers;
  std::vector<int> class_of_center(num_classes, -1);
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;
    Matrix sel = Matrix::Zero(1, bs);
    for (Eigen::Index i = 0; i < bs; ++i)
      if (source.labels[i] == c) sel(0, i) = 1.0 / counts[c];
    class_of_center[c] = static_cast<int>(centers.size());
    centers.push_back(matmul(Tensor(sel), source.features));
  }
  if (centers.empty())
    throw ContractError("prototype_loss: no valid prototype");

  Tensor center_mat = stack_rows(centers);
  Tensor logits = scale(cosine_matrix(target.features, center_mat),
                        1.0 / cfg.tau);

  Matrix pos_mask = Matrix::Zero(bt, static_cast<Eigen::Index>(centers.size()));
  int used = 0;
  for (Eigen::Index i = 0; i < bt; ++i) {
    int idx = class_of_center[target.labels[i]];
    if (idx < 0) continue;  // pseudo class absent from source batch: skip
    pos_mask(i, idx) = 1.0;
    ++used;
  }

  Tensor log_probs = log_softmax_masked(
      logits, Matrix::Ones(bt, static_cast<Eigen::Index>(centers.size())));
  double divisor = used > 0 ? static_cast<double>(used) : 1.0;
  return scale(sum(mul(log_probs, Tensor(pos_mask))), -1.0 / divisor);
}

ClmReport clm_loss(const FeatureBatch& source, const FeatureBatch& target,
                   int num_classes, const ContrastiveConfig& cfg) {
  ClmReport r;
  r.icl = in_domain_loss(source, target, cfg);
  r.ccl_ts = cross_domain_instance(target, source, cfg);
  r.ccl_st = cross_domain_instance(source, target, cfg);
  r.proto_ts = prototype_loss(target, source, num_classes, cfg);
  r.ccl = add(add(r.ccl_ts, r.ccl_st), r.proto_ts);
  r.total = add(scale(r.icl, cfg.beta1), scale(r.ccl, cfg.beta2));
  return r;
}

}  // namespace ucdrd
