#include "ucdrd/encoder.hpp"

#include <cmath>
#include <random>

namespace ucdrd {

namespace {

Tensor glorot(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = dist(rng);
  return Tensor(std::move(m), /*requires_grad=*/true);
}

}  // namespace

EncoderParams init_encoder(const EncoderConfig& cfg, std::uint64_t seed) {
  if (cfg.heads <= 0 || cfg.dim % cfg.heads != 0)
    throw ContractError("init_encoder: heads (" + std::to_string(cfg.heads) +
                        ") must divide dim (" + std::to_string(cfg.dim) + ")");
  std::mt19937_64 rng(seed);
  EncoderParams p;
  p.cfg = cfg;
  int dk = cfg.dim / cfg.heads;
  for (int h = 0; h < cfg.heads; ++h) {
    p.w_q.push_back(glorot(rng, cfg.dim, dk));
    p.w_k.push_back(glorot(rng, cfg.dim, dk));
    p.w_v.push_back(glorot(rng, cfg.dim, dk));
  }
  p.w_o = glorot(rng, cfg.heads * dk, cfg.dim);
  p.ffn_w1 = glorot(rng, cfg.dim, cfg.ffn_dim);
  p.ffn_b1 = Tensor(Matrix::Zero(1, cfg.ffn_dim), true);
  p.ffn_w2 = glorot(rng, cfg.ffn_dim, cfg.dim);
  p.ffn_b2 = Tensor(Matrix::Zero(1, cfg.dim), true);
  return p;
}

std::vector<std::pair<std::string, Tensor>> EncoderParams::named_tensors(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (size_t h = 0; h < w_q.size(); ++h) {
    out.emplace_back(prefix + "w_q." + std::to_string(h), w_q[h]);
    out.emplace_back(prefix + "w_k." + std::to_string(h), w_k[h]);
    out.emplace_back(prefix + "w_v." + std::to_string(h), w_v[h]);
  }
  out.emplace_back(prefix + "w_o", w_o);
  out.emplace_back(prefix + "ffn_w1", ffn_w1);
  out.emplace_back(prefix + "ffn_b1", ffn_b1);
  out.emplace_back(prefix + "ffn_w2", ffn_w2);
  out.emplace_back(prefix + "ffn_b2", ffn_b2);
  return out;
}

Tensor self_attention_head(const Tensor& x, const EncoderParams& params,
                           int head) {
  Tensor q = matmul(x, params.w_q[head]);
  Tensor k = matmul(x, params.w_k[head]);
  Tensor v = matmul(x, params.w_v[head]);
  double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(params.head_dim()));
  Tensor scores = softmax_rows(scale(matmul(q, transpose(k)), inv_sqrt_dk));
  return matmul(scores, v);
}

Tensor mha(const Tensor& x, const EncoderParams& params) {
  Tensor heads = self_attention_head(x, params, 0);
  for (int h = 1; h < params.cfg.heads; ++h)
    heads = concat_cols(heads, self_attention_head(x, params, h));
  return matmul(heads, params.w_o);
}

Tensor feed_forward(const Tensor& x, const EncoderParams& params) {
  Tensor hidden = relu(add_row_broadcast(matmul(x, params.ffn_w1), params.ffn_b1));
  return add_row_broadcast(matmul(hidden, params.ffn_w2), params.ffn_b2);
}

RumorEmbedding encode(const PathSet& pathset, const EncoderParams& params,
                      Domain domain) {
  const Tensor& x = pathset.paths;
  Tensor attended = mha(x, params);
  if (params.cfg.residual) attended = add(attended, x);
  Tensor ff = feed_forward(attended, params);
  if (params.cfg.residual) ff = add(ff, attended);
  return RumorEmbedding{max_pool_rows(ff), pathset.rumor_id, domain};
}

}  // namespace ucdrd
