#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ucdrd/encoder.hpp"
#include "ucdrd/predictor.hpp"

namespace ucdrd {

/// Same-label source/target rumor pair; label equality holds by construction
/// (source ground truth paired with target pseudo label).
struct CrossPair {
  const PathSet* source;
  const PathSet* target;
  int source_index;  // position in the source batch
  int shared_label;
};

/// For each source sample, uniformly samples (seeded) one target sample with
/// the same pseudo label; sources without a match are skipped.
std::vector<CrossPair> make_pairs(const std::vector<PathSet>& source_pathsets,
                                  const std::vector<int>& source_labels,
                                  const std::vector<PathSet>& target_pathsets,
                                  const std::vector<int>& target_pseudo,
                                  std::mt19937_64& rng);

/// Queries from the source paths, keys/values from the target paths, through
/// the shared head projections, W_O, FFN and max-pool.
Tensor cross_attention(const PathSet& source, const PathSet& target,
                       const EncoderParams& params);

/// KL(p_cross || p) summed over classes and matched pairs; `self_features`
/// holds the self-attention embeddings of the source batch (rows). Both
/// branches carry gradients unless stop_grad_self is set.
Tensor kl_consistency(const std::vector<CrossPair>& pairs,
                      const std::vector<Tensor>& self_embeddings,
                      const EncoderParams& params,
                      const ClassifierParams& rpm,
                      bool stop_grad_self = false);

}  // namespace ucdrd
