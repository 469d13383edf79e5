#pragma once

#include <vector>

#include "ucdrd/pseudo_label.hpp"
#include "ucdrd/tensor.hpp"

namespace ucdrd {

struct ContrastiveConfig {
  double tau = 0.1;
  double alpha1 = 0.9, alpha2 = 0.1;  // in-domain mixture, sums to 1
  double beta1 = 0.7, beta2 = 0.3;    // ICL vs CCL mixture, sums to 1
  bool include_self = false;          // literal self-pair variant
};

/// Encoded mini-batch: stacked rumor vectors plus per-sample labels
/// (ground truth for source, pseudo for target).
struct FeatureBatch {
  Tensor features;          // B x d, graph-recorded
  std::vector<int> labels;
  Eigen::Index size() const { return features.rows(); }
};

/// In-domain supervised contrastive loss over cosine similarities at
/// temperature tau. Anchors without a positive contribute zero; the
/// prefactor stays 1/B.
Tensor supcon_in_domain(const FeatureBatch& batch, const ContrastiveConfig& cfg);

/// alpha1 * L_SCL(source) + alpha2 * L_SCL(target-with-pseudo).
Tensor in_domain_loss(const FeatureBatch& source, const FeatureBatch& target,
                      const ContrastiveConfig& cfg);

/// Instance-wise cross-domain loss with `anchors` scored against the full
/// contrast batch (no self-exclusion; the sets are disjoint by construction).
Tensor cross_domain_instance(const FeatureBatch& anchors,
                             const FeatureBatch& contrasts,
                             const ContrastiveConfig& cfg);

/// Pulls each pseudo-labeled target sample toward its class's source
/// prototype against the other valid prototypes. Prototypes are computed
/// differentiably from the source features (no stop-gradient).
Tensor prototype_loss(const FeatureBatch& target, const FeatureBatch& source,
                      int num_classes, const ContrastiveConfig& cfg);

struct ClmReport {
  Tensor icl;        // in-domain mixture
  Tensor ccl_ts;     // cross-domain t->s
  Tensor ccl_st;     // cross-domain s->t
  Tensor proto_ts;   // prototype t->s
  Tensor ccl;        // unweighted sum of the three above
  Tensor total;      // beta1*icl + beta2*ccl
};

ClmReport clm_loss(const FeatureBatch& source, const FeatureBatch& target,
                   int num_classes, const ContrastiveConfig& cfg);

}  // namespace ucdrd
