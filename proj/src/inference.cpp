#include "noisyrd/inference.hpp"

#include <cmath>
#include <stdexcept>

#include "noisyrd/math.hpp"

namespace noisyrd {

double bias_aware_halfwidth(double B, double se, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("bias_aware_halfwidth: alpha must lie in (0,1)");
  if (B < 0.0 || se < 0.0)
    throw std::domain_error("bias_aware_halfwidth: B and se must be >= 0");
  if (B == 0.0 && se == 0.0)
    throw std::domain_error("bias_aware_halfwidth: B and se cannot both be 0");
  double zq = normal_quantile(1.0 - alpha / 2.0);
  if (se == 0.0) return B;
  if (B == 0.0) return zq * se;

  // coverage at the worst case b = B
  auto coverage = [&](double l) {
    return normal_cdf((l - B) / se) - normal_cdf((-l - B) / se);
  };
  double lo = std::max(B, 0.5 * zq * se);
  double hi = B + zq * se + 1.0;
  double target = 1.0 - alpha;
  while (hi - lo > 1e-10) {
    double mid = 0.5 * (lo + hi);
    if (coverage(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

template <typename F>
auto stage(const char* name, F&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

PipelineContext prepare_pipeline(const SampleBatch& batch,
                                 const NoiseModel& model,
                                 const TargetSpec& target,
                                 const PipelineOptions& opt) {
  stage("input", [&] { batch.validate(); return 0; });

  PipelineContext ctx{model, {}, {}, 0.0, target, std::nullopt, {}, {},
                      opt.alpha, opt.regularity_delta, {}};

  Interval window = stage("window", [&] {
    return opt.window ? *opt.window : model.default_window(batch.cutoff);
  });

  ctx.grids = stage("grids", [&] {
    return build_grids(model, window, batch.cutoff, opt.grid);
  });

  ctx.pilot = stage("pilot", [&] {
    if (opt.user_fbar)
      return pilot_from_fbar(opt.user_fbar->first, opt.user_fbar->second,
                             ctx.grids);
    return npmle_em(batch.z, model, ctx.grids, opt.pilot_max_iter,
                    opt.pilot_tol);
  });

  ctx.sigma2 = stage("sigma2", [&] {
    return opt.sigma2 ? *opt.sigma2
                      : estimate_sigma2(batch.z, batch.y, batch.w);
  });

  ctx.target.M = stage("bounds", [&] {
    if (opt.M) return *opt.M;
    RangeEstimate r = estimate_M(batch.z, batch.y, batch.w, window);
    if (r.cv_failed)
      ctx.warnings.push_back(
          "M heuristic: cross-validation failed; using half the raw outcome "
          "range");
    double m = std::max(r.m, opt.m_floor);
    if (r.m < opt.m_floor)
      ctx.warnings.push_back("M heuristic: raw estimate below floor, using " +
                             std::to_string(opt.m_floor));
    return m;
  });
  if (opt.M_prime) ctx.target.M_prime = *opt.M_prime;

  if (!target.is_constant()) {
    ctx.wbar = stage("wbar", [&] {
      return make_wbar(ctx.target, model, ctx.grids, ctx.pilot, batch.cutoff,
                       batch.z);
    });
    if (ctx.wbar->mixed_sign)
      ctx.warnings.push_back(
          "target weights change sign on the latent grid (mixed-sign wbar)");
  }

  ctx.weights = stage("weights", [&] {
    if (opt.user_gamma) {
      if (opt.user_gamma->size() != ctx.grids.running.count())
        throw std::invalid_argument(
            "user-supplied weights do not match the running grid");
      WeightFunction w;
      w.gamma = *opt.user_gamma;
      w.window = ctx.grids.running.window;
      w.diagnostics.max_abs_gamma = w.gamma.lpNorm<Eigen::Infinity>();
      return w;
    }
    return solve_weights(model, ctx.grids, ctx.pilot, ctx.sigma2, batch.size(),
                         ctx.target, ctx.wbar ? &ctx.wbar->wbar : nullptr,
                         opt.solve);
  });

  ctx.h = stage("balance", [&] { return compute_h(ctx.weights, model, ctx.grids); });
  return ctx;
}

EstimateReport run_with_context(const SampleBatch& batch,
                                const PipelineContext& ctx) {
  stage("input", [&] { batch.validate(); return 0; });

  EstimateReport rep;
  rep.alpha = ctx.alpha;
  rep.target = ctx.target;
  rep.warnings = ctx.warnings;

  RatioEstimate est = stage("estimate", [&] {
    return ratio_estimate(batch, ctx.weights, ctx.grids.running, ctx.model);
  });
  double v_hat = stage("variance", [&] {
    return plugin_variance(batch, ctx.weights, ctx.grids.running, ctx.model,
                           est.mu_plus, est.mu_minus);
  });

  DistributionBand band = stage("band", [&] {
    return build_band(batch.z, ctx.model, ctx.grids);
  });

  BiasBoundResult bias = stage("bias_bound", [&] {
    return worst_case_bias(ctx.h, band, ctx.model, ctx.grids.latent,
                           ctx.target, ctx.wbar ? &ctx.wbar->wbar : nullptr);
  });

  rep.tau_hat = est.tau_hat;
  rep.se = std::sqrt(v_hat / static_cast<double>(batch.size()));
  rep.b_hat = bias.b_hat;
  rep.halfwidth = stage("halfwidth", [&] {
    return bias_aware_halfwidth(rep.b_hat, rep.se, ctx.alpha);
  });
  rep.ci = Interval{rep.tau_hat - rep.halfwidth, rep.tau_hat + rep.halfwidth};

  RegularityReport reg =
      check_regularity(ctx.weights, ctx.grids, ctx.model, batch.z,
                       ctx.regularity_delta, std::numeric_limits<double>::infinity(), 1.0);
  if (!reg.pass)
    rep.warnings.push_back(
        "regularity check failed: a side's mean weight is below delta");

  rep.diagnostics.qp = ctx.weights.diagnostics;
  rep.diagnostics.lp_iterations = bias.lp_iterations;
  rep.diagnostics.lp_rel_gap = bias.lp_rel_gap;
  rep.diagnostics.regularity = reg;
  rep.diagnostics.pilot_loglik = ctx.pilot.loglik;
  rep.diagnostics.pilot_iterations = ctx.pilot.iterations;
  rep.diagnostics.sigma2 = ctx.sigma2;
  rep.diagnostics.m_used = ctx.target.M;
  rep.diagnostics.m_prime_used = ctx.target.M_prime;
  rep.diagnostics.window = ctx.weights.window;
  rep.diagnostics.z_points = ctx.grids.running.count();
  rep.diagnostics.u_points = ctx.grids.latent.count();
  rep.diagnostics.n = batch.size();
  rep.diagnostics.n_eff_plus = est.n_eff_plus;
  rep.diagnostics.n_eff_minus = est.n_eff_minus;
  rep.diagnostics.band_radius = band.radius;
  return rep;
}

EstimateReport run_pipeline(const SampleBatch& batch, const NoiseModel& model,
                            const TargetSpec& target,
                            const PipelineOptions& options) {
  PipelineContext ctx = prepare_pipeline(batch, model, target, options);
  return run_with_context(batch, ctx);
}

}  // namespace noisyrd
