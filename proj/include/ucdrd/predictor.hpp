#pragma once

#include <cstdint>
#include <vector>

#include "ucdrd/encoder.hpp"
#include "ucdrd/tensor.hpp"

namespace ucdrd {

inline constexpr double kProbClamp = 1e-12;

struct ClassifierParams {
  Tensor w;  // d x N_c
  Tensor b;  // 1 x N_c
  int num_classes() const { return static_cast<int>(w.cols()); }
};

ClassifierParams init_classifier(int dim, int num_classes, std::uint64_t seed);

struct LossWeights {
  double gamma1 = 0.8, gamma2 = 0.1, gamma3 = 0.1;  // CE / CL / CA, sums to 1
};

/// softmax(o W + b) for a single 1 x d embedding; returns 1 x N_c.
Tensor predict(const Tensor& embedding, const ClassifierParams& params);

/// Row-wise predictions for a B x d feature matrix; returns B x N_c.
Tensor predict_batch(const Tensor& features, const ClassifierParams& params);

/// Mean negative log-probability of the true class, probabilities clamped
/// at 1e-12 before the log.
Tensor cross_entropy_source(const Tensor& features,
                            const std::vector<int>& labels,
                            const ClassifierParams& params);

/// gamma1 * ce + gamma2 * cl + gamma3 * ca.
Tensor total_loss(const Tensor& ce, const Tensor& cl, const Tensor& ca,
                  const LossWeights& weights);

/// Argmax class, ties to the lowest index.
int infer_label(const Tensor& embedding, const ClassifierParams& params);

}  // namespace ucdrd
