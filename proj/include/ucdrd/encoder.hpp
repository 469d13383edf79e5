#pragma once

#include <cstdint>
#include <vector>

#include "ucdrd/data_model.hpp"
#include "ucdrd/tensor.hpp"

namespace ucdrd {

struct EncoderConfig {
  int dim = 300;   // d, rumor feature dimension
  int heads = 4;   // h, must divide dim
  int ffn_dim = 600;
  bool residual = false;  // off unless explicitly enabled
};

/// Multi-head attention projections plus the two-layer relu feed-forward.
/// Shared between self-attention encoding and cross-attention.
struct EncoderParams {
  EncoderConfig cfg;
  std::vector<Tensor> w_q, w_k, w_v;  // per head: d x d_k / d x d_k / d x d_v
  Tensor w_o;                         // h*d_v x d
  Tensor ffn_w1, ffn_b1;              // d x d_ff, 1 x d_ff
  Tensor ffn_w2, ffn_b2;              // d_ff x d, 1 x d

  int head_dim() const { return cfg.dim / cfg.heads; }
  std::vector<std::pair<std::string, Tensor>> named_tensors(
      const std::string& prefix) const;
};

/// Glorot-uniform initialized parameters from the given seed.
EncoderParams init_encoder(const EncoderConfig& cfg, std::uint64_t seed);

struct RumorEmbedding {
  Tensor vector;  // 1 x d
  std::string rumor_id;
  Domain domain = Domain::source;
};

/// softmax((X W_Q)(X W_K)^T / sqrt(d_k)) (X W_V) for head j.
Tensor self_attention_head(const Tensor& x, const EncoderParams& params,
                           int head);

/// concat(head_1..head_h) W_O.
Tensor mha(const Tensor& x, const EncoderParams& params);

/// relu(x W1 + b1) W2 + b2, row-wise.
Tensor feed_forward(const Tensor& x, const EncoderParams& params);

/// max_pool_rows(FFN(MHA(X))) -> the rumor vector.
RumorEmbedding encode(const PathSet& pathset, const EncoderParams& params,
                      Domain domain = Domain::source);

}  // namespace ucdrd
