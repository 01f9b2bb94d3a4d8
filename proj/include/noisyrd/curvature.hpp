#pragma once

#include "noisyrd/types.hpp"

namespace noisyrd {

/// Inputs for the noise-implied bounds on the derivatives of the conditional
/// response function under Gaussian measurement error: a variation bound M
/// on the latent response, the noise scale nu, and a lower bound rho on the
/// marginal density at the evaluation point.
struct CurvatureQuery {
  double M = 1.0;
  double nu = 1.0;
  double rho = 0.1;
};

struct DerivativeBounds {
  double d1_lo = 0.0;
  double d1_hi = 0.0;
  double d2_lo = 0.0;
  double d2_hi = 0.0;
};

struct SharpenedUpperBounds {
  double d1_hi_sharp = 0.0;
  double d2_hi_sharp = 0.0;
};

/// Closed-form first/second derivative bounds:
///   d1_lo = (M/nu)  sqrt(-log(2 pi nu^2 rho^2))
///   d1_hi = (5M/nu) sqrt(-log(2 pi nu^2 rho^2 / 25))
///   d2_lo = (M/(5 nu^2)) (-log(2 pi nu^2 rho^2))
///   d2_hi = (13M/nu^2)   (-log(2 pi nu^2 rho^2 / 25))
/// Throws std::domain_error when rho exceeds the maximal mixture density or
/// the upper bounds' logarithms would be undefined.
DerivativeBounds derivative_bounds_closed_form(const CurvatureQuery& q);

/// Upper bounds sharpened by minimizing the free-parameter form over c on a
/// 200-point logarithmic grid refined by golden-section search; never above
/// the closed-form bounds.
SharpenedUpperBounds sharpened_upper_bounds(const CurvatureQuery& q);

/// Lower bound on the worst-case second derivative from the three-point-mass
/// construction, maximized over a 200 x 200 (c, w) grid subject to the
/// density floor; never below the closed-form d2_lo.
double sharpened_lower_bound_d2(const CurvatureQuery& q);

}  // namespace noisyrd
