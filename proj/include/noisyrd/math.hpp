#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace noisyrd {

template <typename Scalar>
inline Scalar normal_pdf(Scalar x) {
  constexpr Scalar inv_sqrt_2pi =
      Scalar(1) / Scalar(2.5066282746310005024157652848110);
  return inv_sqrt_2pi * std::exp(Scalar(-0.5) * x * x);
}

template <typename Scalar>
inline Scalar normal_cdf(Scalar x) {
  constexpr Scalar inv_sqrt2 = Scalar(0.70710678118654752440084436210485);
  return Scalar(0.5) * std::erfc(-x * inv_sqrt2);
}

/// Standard normal quantile (Acklam's rational approximation polished by
/// one Newton step on the CDF; accurate to ~1e-15 over (0,1)).
template <typename Scalar>
Scalar normal_quantile(Scalar p) {
  if (!(p > Scalar(0) && p < Scalar(1)))
    throw std::domain_error("normal_quantile: p must lie in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double pl = 0.02425;
  double q, x;
  if (p < pl) {
    q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= 1 - pl) {
    q = p - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  // one Newton polish
  double e = normal_cdf(x) - static_cast<double>(p);
  x -= e / normal_pdf(x);
  return static_cast<Scalar>(x);
}

/// log C(n, k) via lgamma.
inline double log_binomial_coef(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Binomial(n, p) pmf at integer k.
inline double binomial_pmf(int k, int n, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  double lg = log_binomial_coef(n, k) + k * std::log(p) +
              (n - k) * std::log1p(-p);
  return std::exp(lg);
}

/// Order-independent accumulation (Kahan–Neumaier).
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace noisyrd
