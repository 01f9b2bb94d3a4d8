#include "noisyrd/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "noisyrd/math.hpp"

namespace noisyrd {

namespace {
constexpr double kDensityFloor = 1e-300;

bool is_integer(double z) { return z == std::floor(z); }
}  // namespace

NoiseModel NoiseModel::gaussian(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu))
    throw std::invalid_argument("NoiseModel: nu must be a positive real");
  return NoiseModel(Kind::Gaussian, nu, 0);
}

NoiseModel NoiseModel::binomial(int trials) {
  if (trials < 1)
    throw std::invalid_argument("NoiseModel: trials must be >= 1");
  return NoiseModel(Kind::Binomial, 0.0, trials);
}

bool NoiseModel::latent_domain_contains(double u) const {
  if (!std::isfinite(u)) return false;
  if (kind_ == Kind::Gaussian) return true;
  return u > 0.0 && u < 1.0;
}

void NoiseModel::require_latent(double u) const {
  if (!latent_domain_contains(u))
    throw std::domain_error(
        "NoiseModel: latent value outside the model's latent domain");
}

double NoiseModel::density(double z, double u) const {
  require_latent(u);
  if (kind_ == Kind::Gaussian) {
    double x = (z - u) / nu_;
    double d = normal_pdf(x) / nu_;
    return d < kDensityFloor ? 0.0 : d;
  }
  if (!is_integer(z) || z < 0.0 || z > trials_) return 0.0;
  return binomial_pmf(static_cast<int>(z), trials_, u);
}

double NoiseModel::cond_cdf(double t, double u) const {
  require_latent(u);
  if (kind_ == Kind::Gaussian) {
    return normal_cdf((t - u) / nu_);
  }
  if (t < 0.0) return 0.0;
  int top = std::min(static_cast<int>(std::floor(t)), trials_);
  double acc = 0.0;
  for (int k = 0; k <= top; ++k) acc += binomial_pmf(k, trials_, u);
  return std::min(acc, 1.0);
}

double NoiseModel::interval_prob(double a, double b, double u) const {
  require_latent(u);
  if (!(a < b)) return 0.0;
  if (kind_ == Kind::Gaussian) {
    return normal_cdf((b - u) / nu_) - normal_cdf((a - u) / nu_);
  }
  // P(a <= Z < b) over the integer support.
  int lo = static_cast<int>(std::ceil(a));
  int hi = static_cast<int>(std::ceil(b)) - 1;
  lo = std::max(lo, 0);
  hi = std::min(hi, trials_);
  double acc = 0.0;
  for (int k = lo; k <= hi; ++k) acc += binomial_pmf(k, trials_, u);
  return acc;
}

Interval NoiseModel::default_window(double cutoff) const {
  if (!std::isfinite(cutoff))
    throw std::invalid_argument("default_window: cutoff must be finite");
  if (kind_ == Kind::Gaussian) {
    return Interval{cutoff - 3.0 * nu_, cutoff + 3.0 * nu_};
  }
  if (cutoff < 0.0 || cutoff > trials_)
    throw std::invalid_argument(
        "default_window: binomial cutoff must lie in [0, trials]");
  double half = 1.5 * std::sqrt(static_cast<double>(trials_));
  return Interval{std::max(0.0, cutoff - half),
                  std::min(static_cast<double>(trials_), cutoff + half)};
}

}  // namespace noisyrd
