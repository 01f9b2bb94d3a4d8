#include "noisyrd/estimator.hpp"

#include <cmath>

namespace noisyrd {

void SampleBatch::validate() const {
  const Index n = z.size();
  if (y.size() != n || w.size() != n)
    throw DataError("sample batch: z, y, w must have equal lengths");
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(z[i]) || !std::isfinite(y[i]))
      throw DataError("sample batch: non-finite entry at row " +
                      std::to_string(i + 1));
    double expect = z[i] >= cutoff ? 1.0 : 0.0;
    if (w[i] != expect)
      throw DataError(
          "sample batch: treatment must equal 1 exactly when z >= cutoff and "
          "0 otherwise; row " + std::to_string(i + 1) + " violates the "
          "assignment rule");
  }
}

RatioEstimate ratio_estimate(const SampleBatch& batch,
                             const WeightFunction& weights,
                             const RunningGrid& grid,
                             const NoiseModel& model) {
  RatioEstimate est;
  double num_p = 0.0, den_p = 0.0, num_m = 0.0, den_m = 0.0;
  for (Index i = 0; i < batch.size(); ++i) {
    if (!std::isfinite(batch.y[i]))
      throw DataError("ratio_estimate: non-finite outcome");
    double g = eval_gamma(weights, grid, model, batch.z[i]);
    if (g == 0.0) continue;
    if (batch.z[i] >= batch.cutoff) {
      num_p += g * batch.y[i];
      den_p += g;
      ++est.n_eff_plus;
    } else {
      num_m += g * batch.y[i];
      den_m += g;
      ++est.n_eff_minus;
    }
  }
  if (den_p == 0.0 || den_m == 0.0)
    throw DataError("ratio_estimate: empty side (no weighted samples)");
  est.mu_plus = num_p / den_p;
  est.mu_minus = num_m / den_m;
  est.tau_hat = est.mu_plus - est.mu_minus;
  return est;
}

double plugin_variance(const SampleBatch& batch, const WeightFunction& weights,
                       const RunningGrid& grid, const NoiseModel& model,
                       double mu_plus, double mu_minus) {
  const double n = static_cast<double>(batch.size());
  double num_p = 0.0, den_p = 0.0, num_m = 0.0, den_m = 0.0;
  for (Index i = 0; i < batch.size(); ++i) {
    double g = eval_gamma(weights, grid, model, batch.z[i]);
    if (g == 0.0) continue;
    if (batch.z[i] >= batch.cutoff) {
      double r = batch.y[i] - mu_plus;
      num_p += g * g * r * r;
      den_p += g;
    } else {
      double r = batch.y[i] - mu_minus;
      num_m += g * g * r * r;
      den_m += g;
    }
  }
  if (den_p == 0.0 || den_m == 0.0)
    throw DataError("plugin_variance: empty side (no weighted samples)");
  double vp = (num_p / n) / std::pow(den_p / n, 2);
  double vm = (num_m / n) / std::pow(den_m / n, 2);
  return vp + vm;
}

}  // namespace noisyrd
