#pragma once

#include <optional>
#include <string>

#include "noisyrd/grids.hpp"
#include "noisyrd/noise_model.hpp"
#include "noisyrd/pilot.hpp"
#include "noisyrd/types.hpp"

namespace noisyrd {

/// Estimand selection. ConstantEffect targets a constant treatment effect;
/// the rest target weighted effects identified through an (unnormalized)
/// latent weight function wbar.
struct TargetSpec {
  enum class Kind { ConstantEffect, RDParamAt, CutoffChange, NoiseChange };

  Kind kind = Kind::ConstantEffect;
  double c_prime = 0.0;    // RDParamAt / CutoffChange
  double nu_prime = 0.0;   // NoiseChange
  double M = 1.0;          // bound on the variation of the control response
  double M_prime = 0.0;    // bound on the variation of tau(u); unused for
                           // ConstantEffect

  bool is_constant() const { return kind == Kind::ConstantEffect; }
  static std::string kind_name(Kind k);
};

struct WbarResult {
  Vector wbar;            // over the latent grid
  bool mixed_sign = false;
};

/// Builds the unnormalized target weights wbar(u) on the latent grid.
///  - RDParamAt:    wbar(u) = p(c'|u) / fhat(c') with fhat from the pilot;
///  - CutoffChange: wbar(u) = P(c' <= Z < c | u) / Fhat([c', c)) with Fhat
///                  the empirical measure of samples_z;
///  - NoiseChange:  wbar(u) = (Phi_{nu'}(c-u) - Phi_{nu}(c-u)) / Khat with
///                  Khat the pilot-implied normalizer; may change sign, in
///                  which case the mixed_sign flag is set.
WbarResult make_wbar(const TargetSpec& spec, const NoiseModel& model,
                     const GridPair& grids, const PilotDensity& pilot,
                     double cutoff, const VectorRef& samples_z);

/// Validates TargetSpec invariants against the model/cutoff.
void validate_target(const TargetSpec& spec, const NoiseModel& model,
                     double cutoff);

}  // namespace noisyrd
