#pragma once

#include <vector>

#include "ucdrd/tensor.hpp"

namespace ucdrd {

/// Per-class source-batch centroids. Classes absent from the batch are
/// marked invalid and excluded from assignment.
struct PrototypeSet {
  Matrix centers;            // N_c x d, rows of invalid classes are zero
  std::vector<int> counts;   // per-class sample counts
  bool valid(int c) const { return counts[c] > 0; }
  int num_valid() const;
};

struct PseudoLabeledBatch {
  Matrix features;                 // |B^t| x d
  std::vector<int> labels;         // class index per sample
  std::vector<double> distances;   // Euclidean distance to assigned center
  int iterations = 0;
  std::vector<double> objective_trace;  // objective after each assignment
};

PrototypeSet source_prototypes(const Matrix& features,
                               const std::vector<int>& labels,
                               int num_classes);

/// Lloyd iterations in Euclidean distance from the prototype initialization.
/// A cluster emptied during iteration keeps its previous center. Ties in
/// assignment go to the lower class index.
PseudoLabeledBatch kmeans_assign(const Matrix& target_features,
                                 const PrototypeSet& init, int max_iter = 100,
                                 double tol = 1e-4,
                                 bool cosine_distance = false);

/// Sum of squared distances to assigned centers; the quantity the Lloyd
/// iterations decrease.
double kmeans_objective(const Matrix& features, const Matrix& centers,
                        const std::vector<int>& labels);

}  // namespace ucdrd
