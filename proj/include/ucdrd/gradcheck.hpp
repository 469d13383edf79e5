#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ucdrd/trainer.hpp"

namespace ucdrd {

/// Max relative error between an analytic and a finite-difference gradient.
/// Entries where both magnitudes fall below `mask_eps` are skipped: central
/// differences at h=1e-5 carry ~1e-10 of absolute roundoff noise, so the
/// relative error of near-zero entries measures the noise, not the gradient.
double max_rel_error(const Matrix& analytic, const Matrix& fd,
                     double mask_eps = 1e-6);

/// Central finite differences (step h) of a scalar-valued closure with
/// respect to every entry of `param`. The closure must rebuild its graph on
/// each call and read the parameter's current value.
Matrix fd_gradient(const std::function<double()>& loss_value, Tensor& param,
                   double h = 1e-5);

struct GradCheckEntry {
  std::string loss;
  std::string group;
  double max_rel_err;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool passed(double tol_full = 1e-3, double tol_isolated = 1e-4) const;
};

/// Builds a model and a synthetic micro batch pair from the config, freezes
/// the discrete choices (pseudo labels, cross-attention pairs), and checks
/// the autodiff gradient of every loss component and of the composite
/// objective against central finite differences, per parameter group.
GradCheckReport run_gradcheck(const RunConfig& cfg, int source_batch = 4,
                              int target_batch = 4);

}  // namespace ucdrd
