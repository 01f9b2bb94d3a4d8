#pragma once

#include <cstdint>
#include <optional>

#include "noisyrd/estimator.hpp"
#include "noisyrd/inference.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/types.hpp"

namespace noisyrd {

/// One synthetic design cell. Setups 1-2 use Gaussian noise with variance
/// nu2; setups 3-4 use binomial counts with K trials.
struct SetupSpec {
  int id = 1;          // 1..4
  Index n = 1000;
  double nu2 = 1.0;    // setups 1-2
  int K = 50;          // setups 3-4
  std::uint64_t seed = 1;

  void validate() const;
  NoiseModel noise_model() const;
  double cutoff() const;
  double true_tau() const;
  /// Half the range of the latent conditional response (the oracle M).
  double oracle_M() const;
};

struct GeneratedBatch {
  SampleBatch batch;
  double tau = 0.0;
};

/// Draws one batch from the design. Setup 2's atom location k and weight p
/// solve phi(k) = 0.1, p = phi(k)/phi(0) by root-finding at call time.
GeneratedBatch generate(const SetupSpec& setup);

struct MCResult {
  double coverage = 0.0;
  double mean_length = 0.0;
  double mae = 0.0;
  Index replications = 0;
  double mean_B_hat = 0.0;
  Index failures = 0;
  bool weights_reused = false;
};

struct MCOptions {
  std::optional<double> M;     // default: uninformative M = 1
  double alpha = 0.05;
  /// Fit the pilot/weights once per cell from a dedicated draw and reuse
  /// them across replications (the per-replication stages stay untouched).
  bool reuse_weights = true;
  int jobs = 1;
  GridOptions grid;
};

/// Monte Carlo evaluation of the pipeline over `reps` replications with
/// per-replication seeds base_seed + r. Failed replications are counted and
/// excluded from the averages.
MCResult run_mc(const SetupSpec& setup, const MCOptions& options, Index reps,
                std::uint64_t base_seed);

/// Setup 2 atom constants (exposed for tests).
struct Setup2Constants {
  double k = 0.0;
  double p = 0.0;
};
Setup2Constants setup2_constants();

}  // namespace noisyrd
