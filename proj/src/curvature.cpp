#include "noisyrd/curvature.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "noisyrd/math.hpp"

namespace noisyrd {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void validate(const CurvatureQuery& q) {
  if (!(q.M > 0.0) || !(q.nu > 0.0) || !(q.rho > 0.0))
    throw std::domain_error("curvature: M, nu, rho must be positive");
  double max_density = 1.0 / (std::sqrt(kTwoPi) * q.nu);
  if (q.rho > max_density)
    throw std::domain_error(
        "curvature: rho exceeds the maximal mixture density 1/(sqrt(2 pi) nu)");
}

// The appendix form of the first-derivative bound in the standardized
// (nu = 1) problem with density floor rt: (2M + c)(sqrt(L) + sqrt(Lc)).
double d1_of_c(double c, double M, double rt, double L) {
  double arg = kTwoPi * c * c * rt * rt / std::pow(2.0 * M + c, 2);
  if (arg >= 1.0) return std::numeric_limits<double>::infinity();
  return (2.0 * M + c) * (std::sqrt(L) + std::sqrt(-std::log(arg)));
}

// Assembled second-derivative bound from the same proof displays:
// |mu| (Lc + L) + 2 |mu'| sqrt(L) with |mu| <= 2M + c and |mu'| <= d1_of_c.
double d2_of_c(double c, double M, double rt, double L) {
  double arg = kTwoPi * c * c * rt * rt / std::pow(2.0 * M + c, 2);
  if (arg >= 1.0) return std::numeric_limits<double>::infinity();
  double Lc = -std::log(arg);
  return (2.0 * M + c) * (L + Lc) + 2.0 * d1_of_c(c, M, rt, L) * std::sqrt(L);
}

template <typename F>
double golden_minimize(F f, double a, double b) {
  constexpr double gr = 0.61803398874989484820458683436564;
  double c1 = b - gr * (b - a), c2 = a + gr * (b - a);
  double f1 = f(c1), f2 = f(c2);
  while (b - a > 1e-12) {
    if (f1 > f2) {
      a = c1;
      c1 = c2;
      f1 = f2;
      c2 = a + gr * (b - a);
      f2 = f(c2);
    } else {
      b = c2;
      c2 = c1;
      f2 = f1;
      c1 = b - gr * (b - a);
      f1 = f(c1);
    }
  }
  double mid = 0.5 * (a + b);
  return std::min({f(mid), f1, f2});
}

template <typename F>
double minimize_over_c(F f, double M) {
  const int grid_n = 200;
  double lo = std::log10(1e-3 * M), hi = std::log10(1e3 * M);
  double best = std::numeric_limits<double>::infinity();
  int best_i = 0;
  for (int i = 0; i < grid_n; ++i) {
    double c = std::pow(10.0, lo + (hi - lo) * i / (grid_n - 1.0));
    double v = f(c);
    if (v < best) {
      best = v;
      best_i = i;
    }
  }
  double a = std::pow(10.0, lo + (hi - lo) * std::max(0, best_i - 1) / (grid_n - 1.0));
  double b = std::pow(10.0, lo + (hi - lo) * std::min(grid_n - 1, best_i + 1) / (grid_n - 1.0));
  return std::min(best, golden_minimize(f, a, b));
}

}  // namespace

DerivativeBounds derivative_bounds_closed_form(const CurvatureQuery& q) {
  validate(q);
  // rho at the admissible maximum makes the log zero; clamp the rounding
  double L = std::max(0.0, -std::log(kTwoPi * q.nu * q.nu * q.rho * q.rho));
  double arg25 = kTwoPi * q.nu * q.nu * q.rho * q.rho / 25.0;
  if (arg25 >= 1.0)
    throw std::domain_error("curvature: 2 pi nu^2 rho^2 / 25 must be < 1");
  double L25 = -std::log(arg25);
  DerivativeBounds out;
  out.d1_lo = q.M / q.nu * std::sqrt(L);
  out.d1_hi = 5.0 * q.M / q.nu * std::sqrt(L25);
  out.d2_lo = q.M / (5.0 * q.nu * q.nu) * L;
  out.d2_hi = 13.0 * q.M / (q.nu * q.nu) * L25;
  return out;
}

SharpenedUpperBounds sharpened_upper_bounds(const CurvatureQuery& q) {
  DerivativeBounds closed = derivative_bounds_closed_form(q);
  // standardize: nu = 1 with density floor rt = nu * rho, then rescale
  double rt = q.nu * q.rho;
  double L = std::max(0.0, -std::log(kTwoPi * rt * rt));
  double M = q.M;
  SharpenedUpperBounds out;
  out.d1_hi_sharp =
      minimize_over_c([&](double c) { return d1_of_c(c, M, rt, L); }, M) /
      q.nu;
  out.d2_hi_sharp =
      minimize_over_c([&](double c) { return d2_of_c(c, M, rt, L); }, M) /
      (q.nu * q.nu);
  // both routes bound the same supremum; keep the smaller
  out.d1_hi_sharp = std::min(out.d1_hi_sharp, closed.d1_hi);
  out.d2_hi_sharp = std::min(out.d2_hi_sharp, closed.d2_hi);
  return out;
}

double sharpened_lower_bound_d2(const CurvatureQuery& q) {
  validate(q);
  double rt = q.nu * q.rho;
  double M = q.M;
  double phi0 = normal_pdf(0.0);
  double best = 0.0;
  const int grid_n = 200;
  for (int i = 0; i < grid_n; ++i) {
    double c = 6.0 * (i + 1) / static_cast<double>(grid_n);  // (0, 6]
    double phic = normal_pdf(c);
    for (int j = 0; j < grid_n; ++j) {
      double w = (j + 1) / static_cast<double>(grid_n + 1);  // interior (0,1)
      double f0 = (1.0 - w) * phic + w * phi0;
      if (f0 < rt) continue;
      double f2 = (1.0 - w) * (c * c - 1.0) * phic - w * phi0;
      double mu2 = std::abs(-2.0 * M * w * phi0 * (f0 + f2) / (f0 * f0));
      if (mu2 > best) best = mu2;
    }
  }
  return best / (q.nu * q.nu);
}

}  // namespace noisyrd
