#pragma once

#include <optional>

#include "noisyrd/grids.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/types.hpp"

namespace noisyrd {

/// Pilot estimate of the latent mixing distribution and the implied marginal
/// density of the running variable. Used only to shape the weight-design
/// objective; a poor pilot costs power, never validity.
struct PilotDensity {
  Vector g_bar;   // probability vector over the latent grid (may be empty
                  // when the marginal density was supplied by the user)
  Vector f_bar;   // marginal density at the running-grid points
  double loglik = 0.0;
  int iterations = 0;
  bool user_supplied = false;

  // retained for marginal_density_at
  Vector latent_points;
  Vector fbar_z;      // abscissas for user-supplied f_bar interpolation
  Vector fbar_curve;  // values matching fbar_z
};

/// Nonparametric maximum likelihood over the latent grid atoms, fitted with
/// multiplicative EM updates from the uniform start. The log-likelihood is
/// non-decreasing across iterations; iteration stops once the gain drops
/// below `tol` (the update that failed to clear the gain threshold is
/// discarded, so tol = +inf returns the uniform start unchanged).
PilotDensity npmle_em(const VectorRef& samples_z, const NoiseModel& model,
                      const GridPair& grids, int max_iter = 500,
                      double tol = 1e-8);

/// Wraps a user-supplied marginal density (z, density) as a pilot.
PilotDensity pilot_from_fbar(const VectorRef& z, const VectorRef& density,
                             const GridPair& grids);

/// Pilot-implied marginal density at an arbitrary z.
double marginal_density_at(const PilotDensity& pilot, const NoiseModel& model,
                           double z);

/// Mean squared residual of the least-squares fit of y on {1, z, w, z*w}.
double estimate_sigma2(const VectorRef& z, const VectorRef& y,
                       const VectorRef& w);

struct RangeEstimate {
  double m = 0.0;
  bool cv_failed = false;  // fell back to half the raw outcome range
};

/// Half the range, over the weight window, of fitted values from a
/// leave-one-out cross-validated Nadaraya-Watson smoother of y on z in the
/// control arm.
RangeEstimate estimate_M(const VectorRef& z, const VectorRef& y,
                         const VectorRef& w, const Interval& window);

}  // namespace noisyrd
