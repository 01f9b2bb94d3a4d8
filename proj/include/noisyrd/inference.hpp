#pragma once

#include <optional>
#include <string>
#include <vector>

#include "noisyrd/bias_bound.hpp"
#include "noisyrd/estimator.hpp"
#include "noisyrd/grids.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/pilot.hpp"
#include "noisyrd/targets.hpp"
#include "noisyrd/types.hpp"
#include "noisyrd/weight_design.hpp"

namespace noisyrd {

/// Half-length of the bias-aware confidence interval: the smallest l with
/// P(|b + se Z| <= l) >= 1 - alpha for every |b| <= B, found by bisection on
/// the worst case b = B (two-sided normal coverage decreases in |b|).
double bias_aware_halfwidth(double B, double se, double alpha);

struct PipelineOptions {
  GridOptions grid;
  std::optional<Interval> window;   // default: model window around cutoff
  std::optional<double> M;          // default: control-arm range heuristic
  std::optional<double> sigma2;     // default: interacted-regression residual
  std::optional<double> M_prime;    // weighted targets only
  double alpha = 0.05;
  int pilot_max_iter = 500;
  double pilot_tol = 1e-8;
  /// (z, density) curve replacing the EM pilot fit.
  std::optional<std::pair<Vector, Vector>> user_fbar;
  /// Weight values on the running grid replacing the QP solve.
  std::optional<Vector> user_gamma;
  double regularity_delta = 0.05;
  SolveOptions solve;
  double m_floor = 0.01;  // floor applied to the heuristic M
};

struct EstimateReport {
  double tau_hat = 0.0;
  double se = 0.0;
  double b_hat = 0.0;
  double halfwidth = 0.0;
  Interval ci;
  double alpha = 0.05;
  TargetSpec target;

  struct Diagnostics {
    WeightFunction::Diagnostics qp;
    int lp_iterations = 0;
    double lp_rel_gap = 0.0;
    RegularityReport regularity;
    double pilot_loglik = 0.0;
    int pilot_iterations = 0;
    double sigma2 = 0.0;
    double m_used = 0.0;
    double m_prime_used = 0.0;
    Interval window;
    Index z_points = 0;
    Index u_points = 0;
    Index n = 0;
    Index n_eff_plus = 0;
    Index n_eff_minus = 0;
    double band_radius = 0.0;
  } diagnostics;

  std::vector<std::string> warnings;
};

/// Fitted design state shared by every replication of a Monte Carlo cell:
/// everything upstream of the per-sample stages (grids, pilot, weights, h).
struct PipelineContext {
  NoiseModel model;
  GridPair grids;
  PilotDensity pilot;
  double sigma2 = 0.0;
  TargetSpec target;
  std::optional<WbarResult> wbar;
  WeightFunction weights;
  HPair h;
  double alpha = 0.05;
  double regularity_delta = 0.05;
  std::vector<std::string> warnings;  // design-stage warnings
};

/// Runs the design stages (window, grids, pilot, sigma2, wbar, weights,
/// balance) on a batch. Errors carry the stage name.
PipelineContext prepare_pipeline(const SampleBatch& batch,
                                 const NoiseModel& model,
                                 const TargetSpec& target,
                                 const PipelineOptions& options);

/// Runs the per-sample stages (estimate, variance, band, bias bound,
/// halfwidth) against a prepared context.
EstimateReport run_with_context(const SampleBatch& batch,
                                const PipelineContext& context);

/// Full pipeline: prepare_pipeline followed by run_with_context on the same
/// batch.
EstimateReport run_pipeline(const SampleBatch& batch, const NoiseModel& model,
                            const TargetSpec& target,
                            const PipelineOptions& options = {});

}  // namespace noisyrd
