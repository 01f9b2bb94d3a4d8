#pragma once

#include "noisyrd/grids.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/targets.hpp"
#include "noisyrd/types.hpp"
#include "noisyrd/weight_design.hpp"

namespace noisyrd {

/// Empirical-CDF band defining the set of latent distributions treated as
/// consistent with the data: every candidate G must satisfy
/// |sum_j cond_cdf(t, u_j) g_j - f_hat(t)| <= radius at each t point.
struct DistributionBand {
  Vector t_points;  // strictly increasing evaluation abscissas
  Vector f_hat;     // empirical CDF at t_points
  double radius = 0.0;
  Index n = 0;
};

/// Builds the band from all samples: t points are the running-grid points
/// extended by two points beyond each window edge, and the radius follows
/// the sqrt(log(2/alpha_n)/(2n)) rule with alpha_n = min{0.05, n^(-1/4)}.
DistributionBand build_band(const VectorRef& samples_z, const NoiseModel& model,
                            const GridPair& grids);

struct BiasBoundResult {
  double b_hat = 0.0;
  int lp_iterations = 0;
  double lp_primal_residual = 0.0;
  double lp_rel_gap = 0.0;
};

/// Worst-case confounding bias over band-feasible latent distributions,
/// solved as linear programs through the scale-variable (Charnes-Cooper)
/// transformation of the fractional objective. For weighted targets two sign
/// variants are solved and the larger optimum returned.
BiasBoundResult worst_case_bias(const HPair& h, const DistributionBand& band,
                                const NoiseModel& model,
                                const LatentGrid& latent,
                                const TargetSpec& target,
                                const Vector* wbar = nullptr);

}  // namespace noisyrd
