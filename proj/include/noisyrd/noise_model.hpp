#pragma once

#include "noisyrd/types.hpp"

namespace noisyrd {

/// Measurement-error law of the running variable given the latent variable.
///
/// Two families are supported:
///  - Gaussian: Z | U=u ~ N(u, nu^2), density w.r.t. Lebesgue measure;
///  - Binomial: Z | U=u ~ Bin(trials, u) on the count scale, density w.r.t.
///    counting measure on {0, ..., trials}, latent u in the open unit
///    interval.
///
/// Immutable after construction; safe to share across threads.
class NoiseModel {
 public:
  enum class Kind { Gaussian, Binomial };

  static NoiseModel gaussian(double nu);
  static NoiseModel binomial(int trials);

  Kind kind() const { return kind_; }
  bool is_gaussian() const { return kind_ == Kind::Gaussian; }
  double nu() const { return nu_; }
  int trials() const { return trials_; }

  /// p(z | u) with respect to the reference measure. Values below 1e-300 are
  /// truncated to zero to keep downstream linear programs well conditioned.
  double density(double z, double u) const;

  /// P(Z <= t | U = u); non-decreasing and right-continuous in t.
  double cond_cdf(double t, double u) const;

  /// P(a <= Z < b | U = u).
  double interval_prob(double a, double b, double u) const;

  /// Default weight-support window around the cutoff: c +- 3 nu for the
  /// Gaussian family, c +- 1.5 sqrt(trials) (clipped to [0, trials]) for the
  /// binomial family.
  Interval default_window(double cutoff) const;

  /// True if u lies in the latent domain (all reals / open unit interval).
  bool latent_domain_contains(double u) const;

 private:
  NoiseModel(Kind kind, double nu, int trials)
      : kind_(kind), nu_(nu), trials_(trials) {}
  void require_latent(double u) const;

  Kind kind_;
  double nu_ = 0.0;
  int trials_ = 0;
};

}  // namespace noisyrd
