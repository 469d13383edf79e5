#include "ucdrd/cross_attention.hpp"

#include <cmath>

namespace ucdrd {

std::vector<CrossPair> make_pairs(const std::vector<PathSet>& source_pathsets,
                                  const std::vector<int>& source_labels,
                                  const std::vector<PathSet>& target_pathsets,
                                  const std::vector<int>& target_pseudo,
                                  std::mt19937_64& rng) {
  std::vector<CrossPair> pairs;
  for (size_t i = 0; i < source_pathsets.size(); ++i) {
    std::vector<size_t> candidates;
    for (size_t j = 0; j < target_pathsets.size(); ++j)
      if (target_pseudo[j] == source_labels[i]) candidates.push_back(j);
    if (candidates.empty()) continue;
    std::uniform_int_distribution<size_t> pick(0, candidates.size() - 1);
    size_t j = candidates[pick(rng)];
    pairs.push_back(CrossPair{&source_pathsets[i], &target_pathsets[j],
                              static_cast<int>(i), source_labels[i]});
  }
  return pairs;
}

Tensor cross_attention(const PathSet& source, const PathSet& target,
                       const EncoderParams& params) {
  const Tensor& xs = source.paths;
  const Tensor& xt = target.paths;
  if (xs.rows() == 0 || xt.rows() == 0)
    throw ContractError("cross_attention: empty pathset");

  double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.head_dim()));
  Tensor heads;
  for (int h = 0; h < params.cfg.heads; ++h) {
    Tensor q = matmul(xs, params.w_q[h]);
    Tensor k = matmul(xt, params.w_k[h]);
    Tensor v = matmul(xt, params.w_v[h]);
    Tensor scores = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_dk));
    Tensor head = matmul(scores, v);
    heads = (h == 0) ? head : concat_cols(heads, head);
  }
  Tensor attended = matmul(heads, params.w_o);
  if (params.cfg.residual) attended = add(attended, xs);
  Tensor ff = feed_forward(attended, params);
  if (params.cfg.residual) ff = add(ff, attended);
  return max_pool_rows(ff);
}

Tensor kl_consistency(const std::vector<CrossPair>& pairs,
                      const std::vector<Tensor>& self_embeddings,
                      const EncoderParams& params,
                      const ClassifierParams& rpm,
                      bool stop_grad_self) {
  Tensor total = Tensor::scalar(0.0);
  for (const auto& pair : pairs) {
    Tensor cross_emb = cross_attention(*pair.source, *pair.target, params);
    Tensor self_emb = self_embeddings[pair.source_index];
    if (stop_grad_self) self_emb = self_emb.detach();
    Tensor p_cross = clamp_min(predict(cross_emb, rpm), kProbClamp);
    Tensor p_self = clamp_min(predict(self_emb, rpm), kProbClamp);
    Tensor kl = sum(mul(p_cross, sub(log_op(p_cross), log_op(p_self))));
    total = add(total, kl);
  }
  return total;  // summed over pairs, no 1/|B| prefactor
}

}  // namespace ucdrd
