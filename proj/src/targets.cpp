#include "noisyrd/targets.hpp"

#include <cmath>
#include <stdexcept>

#include "noisyrd/math.hpp"

namespace noisyrd {

std::string TargetSpec::kind_name(Kind k) {
  switch (k) {
    case Kind::ConstantEffect: return "constant";
    case Kind::RDParamAt: return "rd_param";
    case Kind::CutoffChange: return "cutoff_change";
    case Kind::NoiseChange: return "noise_change";
  }
  return "unknown";
}

void validate_target(const TargetSpec& spec, const NoiseModel& model,
                     double cutoff) {
  if (!(std::isfinite(spec.M) && spec.M > 0.0))
    throw std::invalid_argument("target: M must be a positive finite real");
  if (spec.is_constant()) return;
  if (!(std::isfinite(spec.M_prime) && spec.M_prime >= 0.0))
    throw std::invalid_argument("target: M' must be a nonnegative finite real");
  switch (spec.kind) {
    case TargetSpec::Kind::CutoffChange:
      if (!(spec.c_prime < cutoff))
        throw std::invalid_argument("target: cutoff_change requires c' < c");
      break;
    case TargetSpec::Kind::NoiseChange:
      if (!model.is_gaussian())
        throw std::invalid_argument(
            "target: noise_change requires a Gaussian noise model");
      if (!(spec.nu_prime > 0.0))
        throw std::invalid_argument("target: noise_change requires nu' > 0");
      break;
    default:
      break;
  }
}

WbarResult make_wbar(const TargetSpec& spec, const NoiseModel& model,
                     const GridPair& grids, const PilotDensity& pilot,
                     double cutoff, const VectorRef& samples_z) {
  if (spec.is_constant())
    throw std::invalid_argument("make_wbar: constant-effect target needs no wbar");
  validate_target(spec, model, cutoff);

  const Vector& u = grids.latent.points;
  WbarResult out;
  out.wbar.resize(u.size());

  switch (spec.kind) {
    case TargetSpec::Kind::RDParamAt: {
      double fc = marginal_density_at(pilot, model, spec.c_prime);
      if (fc < 1e-12)
        throw std::invalid_argument(
            "make_wbar: estimated density at c' is below 1e-12 (target "
            "outside data support)");
      for (Index j = 0; j < u.size(); ++j)
        out.wbar[j] = model.density(spec.c_prime, u[j]) / fc;
      break;
    }
    case TargetSpec::Kind::CutoffChange: {
      Index hits = 0;
      for (Index i = 0; i < samples_z.size(); ++i)
        if (samples_z[i] >= spec.c_prime && samples_z[i] < cutoff) ++hits;
      if (hits == 0)
        throw std::invalid_argument(
            "make_wbar: no sample falls in [c', c)");
      double fhat = static_cast<double>(hits) /
                    static_cast<double>(samples_z.size());
      for (Index j = 0; j < u.size(); ++j)
        out.wbar[j] = model.interval_prob(spec.c_prime, cutoff, u[j]) / fhat;
      break;
    }
    case TargetSpec::Kind::NoiseChange: {
      double nu = model.nu(), nu_p = spec.nu_prime;
      Vector raw(u.size());
      for (Index j = 0; j < u.size(); ++j)
        raw[j] = normal_cdf((cutoff - u[j]) / nu_p) -
                 normal_cdf((cutoff - u[j]) / nu);
      if (raw.lpNorm<Eigen::Infinity>() == 0.0)
        throw std::invalid_argument("make_wbar: null policy (nu' equals nu)");
      if (pilot.g_bar.size() != u.size())
        throw std::invalid_argument(
            "make_wbar: noise_change needs a latent-grid pilot");
      double khat = raw.dot(pilot.g_bar);
      if (std::abs(khat) < 1e-12)
        throw std::invalid_argument(
            "make_wbar: degenerate normalizer for noise_change target");
      out.wbar = raw / khat;
      out.mixed_sign =
          out.wbar.minCoeff() < 0.0 && out.wbar.maxCoeff() > 0.0;
      break;
    }
    default:
      throw std::logic_error("make_wbar: unreachable");
  }
  return out;
}

}  // namespace noisyrd
