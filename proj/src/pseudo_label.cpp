#include "ucdrd/pseudo_label.hpp"

#include <cmath>
#include <limits>

namespace ucdrd {

int PrototypeSet::num_valid() const {
  int n = 0;
  for (int c : counts)
    if (c > 0) ++n;
  return n;
}

PrototypeSet source_prototypes(const Matrix& features,
                               const std::vector<int>& labels,
                               int num_classes) {
  if (features.rows() == 0)
    throw ContractError("source_prototypes: empty batch");
  if (static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw ContractError("source_prototypes: labels/features length mismatch");

  PrototypeSet protos;
  protos.centers = Matrix::Zero(num_classes, features.cols());
  protos.counts.assign(num_classes, 0);
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    int c = labels[i];
    if (c < 0 || c >= num_classes)
      throw ContractError("source_prototypes: label " + std::to_string(c) +
                          " outside [0," + std::to_string(num_classes) + ")");
    protos.centers.row(c) += features.row(i);
    ++protos.counts[c];
  }
  for (int c = 0; c < num_classes; ++c)
    if (protos.counts[c] > 0) protos.centers.row(c) /= protos.counts[c];
  return protos;
}

namespace {

Matrix maybe_normalize(const Matrix& m, bool cosine) {
  if (!cosine) return m;
  Matrix out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    double n = out.row(i).norm();
    if (n > kCosineEps) out.row(i) /= n;
  }
  return out;
}

}  // namespace

PseudoLabeledBatch kmeans_assign(const Matrix& target_features,
                                 const PrototypeSet& init, int max_iter,
                                 double tol, bool cosine_distance) {
  if (init.num_valid() == 0)
    throw ContractError("kmeans_assign: no valid cluster center");

  const int nc = static_cast<int>(init.counts.size());
  Matrix feats = maybe_normalize(target_features, cosine_distance);
  Matrix centers = maybe_normalize(init.centers, cosine_distance);

  PseudoLabeledBatch out;
  out.features = target_features;
  out.labels.assign(feats.rows(), 0);
  out.distances.assign(feats.rows(), 0.0);

  auto assign = [&]() {
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_c = -1;
      for (int c = 0; c < nc; ++c) {
        if (!init.valid(c)) continue;
        double d = (feats.row(i) - centers.row(c)).norm();
        if (d < best) {  // strict: ties keep the lower index
          best = d;
          best_c = c;
        }
      }
      out.labels[i] = best_c;
      out.distances[i] = best;
    }
  };

  assign();
  out.objective_trace.push_back(kmeans_objective(feats, centers, out.labels));
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    Matrix next = centers;
    std::vector<int> counts(nc, 0);
    Matrix sums = Matrix::Zero(nc, feats.cols());
    for (Eigen::Index i = 0; i < feats.rows(); ++i) {
      sums.row(out.labels[i]) += feats.row(i);
      ++counts[out.labels[i]];
    }
    double shift = 0.0;
    for (int c = 0; c < nc; ++c) {
      if (counts[c] == 0) continue;  // emptied cluster keeps its center
      Eigen::RowVectorXd updated = sums.row(c) / counts[c];
      shift = std::max(shift, (updated - centers.row(c)).norm());
      next.row(c) = updated;
    }
    centers = std::move(next);
    assign();
    out.objective_trace.push_back(kmeans_objective(feats, centers, out.labels));
    if (shift < tol) break;
  }
  return out;
}

double kmeans_objective(const Matrix& features, const Matrix& centers,
                        const std::vector<int>& labels) {
  double obj = 0.0;
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    obj += (features.row(i) - centers.row(labels[i])).squaredNorm();
  return obj;
}

}  // namespace ucdrd
