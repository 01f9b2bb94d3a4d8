#pragma once

#include "noisyrd/noise_model.hpp"
#include "noisyrd/types.hpp"

namespace noisyrd {

/// Discretization of the latent space; carries the atoms of candidate mixing
/// distributions.
struct LatentGrid {
  Vector points;  // strictly increasing, inside the model's latent domain
  Index count() const { return points.size(); }
};

/// Discretization of the running-variable space with quadrature weights for
/// the reference measure (trapezoid weights for Gaussian, all ones for the
/// binomial counting measure).
struct RunningGrid {
  Vector points;          // strictly increasing
  Vector lambda_weights;  // same length as points
  Index cutoff_index = 0;  // first index with z >= cutoff
  Interval window;
  double cutoff = 0.0;

  Index count() const { return points.size(); }
  bool is_plus(Index k) const { return k >= cutoff_index; }
};

struct GridPair {
  LatentGrid latent;
  RunningGrid running;
};

struct GridOptions {
  int z_points = 400;
  int u_points = 400;
  double u_span_nu = 4.0;  // latent half-span in units of nu (Gaussian)
};

/// Builds the running-variable grid over `window`. Gaussian: `resolution`
/// equally spaced points with the cutoff inserted as a grid point and
/// trapezoid weights; binomial: every integer in the window with unit
/// weights. Throws if the window lies entirely on one side of the cutoff.
RunningGrid build_running_grid(const NoiseModel& model, const Interval& window,
                               double cutoff, int resolution);

/// Builds the latent grid. Gaussian: equally spaced over
/// cutoff +- span_nu * nu; binomial: equally spaced over the intersection of
/// (0, 1) with (cutoff +- 2 sqrt(trials)) / trials, kept strictly interior.
LatentGrid build_latent_grid(const NoiseModel& model, double cutoff,
                             int resolution, double span_nu = 4.0);

GridPair build_grids(const NoiseModel& model, const Interval& window,
                     double cutoff, const GridOptions& opt = {});

}  // namespace noisyrd
