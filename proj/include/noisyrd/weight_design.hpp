#pragma once

#include <optional>

#include "noisyrd/grids.hpp"
#include "noisyrd/ip_solver.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/pilot.hpp"
#include "noisyrd/targets.hpp"
#include "noisyrd/types.hpp"

namespace noisyrd {

/// Estimator weights on the running grid: entries below the cutoff index act
/// as gamma_minus, entries at or above as gamma_plus. Zero outside the
/// window by construction.
struct WeightFunction {
  Vector gamma;
  Interval window;
  struct Diagnostics {
    double objective = 0.0;
    double t = 0.0;
    double t1 = 0.0;
    double t2 = 0.0;
    double max_abs_gamma = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double rel_gap = 0.0;
  } diagnostics;
};

/// Induced balance functions on the latent grid:
/// h_plus(u)  = sum_{z_k >= c} gamma(z_k) p(z_k|u) lambda_k,
/// h_minus(u) = sum_{z_k <  c} gamma(z_k) p(z_k|u) lambda_k.
struct HPair {
  Vector h_plus;
  Vector h_minus;
};

struct SolveOptions {
  double box_C = std::numeric_limits<double>::infinity();  // disables the box
  double box_beta = 1.0;
  double tol_feas = 1e-10;
  double tol_gap = 1e-8;
};

HPair compute_h(const WeightFunction& weights, const NoiseModel& model,
                const GridPair& grids);

/// Solves the mean-squared-error quadratic program for the estimator weights:
/// minimize (sigma2/n) sum_k gamma_k^2 fbar_k lambda_k + t^2 subject to the
/// per-latent-point imbalance bounds, the side normalizations, the optional
/// box, and window support. For non-constant targets the imbalance bound is
/// split as t = t1 + t2 with the wbar-tracking constraint on t2.
WeightFunction solve_weights(const NoiseModel& model, const GridPair& grids,
                             const PilotDensity& pilot, double sigma2,
                             Index n, const TargetSpec& target,
                             const Vector* wbar = nullptr,
                             const SolveOptions& options = {});

/// Evaluates the weight function at a sample point: nearest same-side grid
/// point for binomial grids, side-aware linear interpolation for Gaussian
/// grids, zero outside the window.
double eval_gamma(const WeightFunction& weights, const RunningGrid& grid,
                  const NoiseModel& model, double z);

struct RegularityReport {
  double max_abs_gamma_plus = 0.0;
  double max_abs_gamma_minus = 0.0;
  double mean_gamma_plus = 0.0;   // (1/n) sum over treated samples
  double mean_gamma_minus = 0.0;  // (1/n) sum over control samples
  double ratio_plus = 0.0;        // max|gamma| / (n^beta * mean)
  double ratio_minus = 0.0;
  bool pass = false;              // means >= delta on both sides
};

/// Diagnostic for the regular-weighting-kernel condition: compares the
/// per-side weight maxima against n^beta * C times the empirical means and
/// flags whether both means clear the lower bound delta.
RegularityReport check_regularity(const WeightFunction& weights,
                                  const GridPair& grids,
                                  const NoiseModel& model,
                                  const VectorRef& samples_z, double delta,
                                  double C, double beta);

}  // namespace noisyrd
