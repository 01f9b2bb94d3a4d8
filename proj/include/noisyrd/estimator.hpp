#pragma once

#include "noisyrd/grids.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/types.hpp"
#include "noisyrd/weight_design.hpp"

namespace noisyrd {

/// Observed sample: running variable, outcome, and treatment indicator with
/// w_i = 1{z_i >= cutoff} exactly.
struct SampleBatch {
  Vector z;
  Vector y;
  Vector w;
  double cutoff = 0.0;

  Index size() const { return z.size(); }
  /// Throws DataError when the lengths disagree or w is inconsistent with
  /// the assignment rule.
  void validate() const;
};

struct RatioEstimate {
  double tau_hat = 0.0;
  double mu_plus = 0.0;
  double mu_minus = 0.0;
  Index n_eff_plus = 0;   // side samples carrying nonzero weight
  Index n_eff_minus = 0;
};

/// Self-normalized ratio estimate: weighted treated mean minus weighted
/// control mean.
RatioEstimate ratio_estimate(const SampleBatch& batch,
                             const WeightFunction& weights,
                             const RunningGrid& grid, const NoiseModel& model);

/// Plug-in estimate of the variance of sqrt(n) * tau_hat; the standard error
/// is sqrt(V / n).
double plugin_variance(const SampleBatch& batch, const WeightFunction& weights,
                       const RunningGrid& grid, const NoiseModel& model,
                       double mu_plus, double mu_minus);

}  // namespace noisyrd
