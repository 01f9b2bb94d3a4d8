#include "noisyrd/bias_bound.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "noisyrd/ip_solver.hpp"

namespace noisyrd {

DistributionBand build_band(const VectorRef& samples_z,
                            const NoiseModel& model, const GridPair& grids) {
  const Index n = samples_z.size();
  if (n < 2) throw std::invalid_argument("build_band: need n >= 2");

  const Vector& zs = grids.running.points;
  std::vector<double> ts(zs.data(), zs.data() + zs.size());
  if (model.is_gaussian()) {
    double step = zs.size() > 1 ? zs[1] - zs[0] : 1.0;
    ts.insert(ts.begin(), {zs[0] - 2 * step, zs[0] - step});
    ts.push_back(zs[zs.size() - 1] + step);
    ts.push_back(zs[zs.size() - 1] + 2 * step);
  } else {
    double lo = zs[0], hi = zs[zs.size() - 1];
    for (double t : {lo - 2.0, lo - 1.0})
      if (t >= 0.0) ts.insert(ts.begin(), t);
    for (double t : {hi + 1.0, hi + 2.0})
      if (t <= model.trials()) ts.push_back(t);
    std::sort(ts.begin(), ts.end());
  }

  DistributionBand band;
  band.n = n;
  band.t_points = Eigen::Map<Vector>(ts.data(), static_cast<Index>(ts.size()));

  Vector sorted = samples_z;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  band.f_hat.resize(band.t_points.size());
  for (Index i = 0; i < band.t_points.size(); ++i) {
    auto it = std::upper_bound(sorted.data(), sorted.data() + sorted.size(),
                               band.t_points[i]);
    band.f_hat[i] =
        static_cast<double>(it - sorted.data()) / static_cast<double>(n);
  }

  double alpha_n = std::min(0.05, std::pow(static_cast<double>(n), -0.25));
  band.radius = std::sqrt(std::log(2.0 / alpha_n) / (2.0 * n));
  return band;
}

namespace {

// One scale-transformed linear program:
//   maximize   q'y
//   subject to h_plus'y = 1,  |C y - f_hat * (1'y)| <= radius * (1'y),  y >= 0
// where C(t, j) = cond_cdf(t, u_j) and the scale s = 1'y has been
// substituted out.
IpResult solve_cc_lp(const Vector& q, const Vector& h_plus, const Matrix& C,
                     const DistributionBand& band) {
  const Index m = q.size();
  const Index T = band.t_points.size();

  IpProblem lp;
  lp.nonneg = true;
  lp.c = -q;  // maximize
  lp.A = h_plus.transpose();
  lp.b = Vector::Constant(1, 1.0);
  lp.G = Matrix::Zero(2 * T, m);
  lp.h = Vector::Zero(2 * T);
  for (Index t = 0; t < T; ++t) {
    for (Index j = 0; j < m; ++j) {
      double base = C(t, j) - band.f_hat[t];
      lp.G(2 * t, j) = base - band.radius;
      lp.G(2 * t + 1, j) = -base - band.radius;
    }
  }

  // retry ladder: heavier regularization and shorter steps stabilize
  // degenerate instances
  const double regs[] = {1e-12, 1e-9, 1e-7};
  const double taus[] = {0.995, 0.99, 0.95};
  IpResult best;
  for (int attempt = 0; attempt < 3; ++attempt) {
    IpOptions opt;
    opt.tol_feas = 1e-11;
    opt.tol_gap = 1e-10;
    opt.static_reg = regs[attempt];
    opt.tau = taus[attempt];
    IpResult sol = solve_ip(lp, opt);
    if (sol.ok() || sol.status == IpStatus::Infeasible ||
        sol.status == IpStatus::Unbounded)
      return sol;
    if (sol.primal_residual <= 1e-9 && sol.rel_gap <= 1e-7 &&
        sol.dual_residual <= 1e-4)
      return sol;
    if (attempt == 0 || sol.rel_gap < best.rel_gap) best = sol;
  }
  return best;
}

}  // namespace

BiasBoundResult worst_case_bias(const HPair& h, const DistributionBand& band,
                                const NoiseModel& model,
                                const LatentGrid& latent,
                                const TargetSpec& target, const Vector* wbar) {
  const Index m = latent.count();
  if (h.h_plus.size() != m || h.h_minus.size() != m)
    throw std::invalid_argument("worst_case_bias: h not on this latent grid");
  if (!h.h_plus.allFinite() || !h.h_minus.allFinite())
    throw std::invalid_argument("worst_case_bias: non-finite h");
  const bool weighted = !target.is_constant();
  if (weighted && (wbar == nullptr || wbar->size() != m))
    throw std::invalid_argument("worst_case_bias: weighted target needs wbar");

  Matrix C(band.t_points.size(), m);
  for (Index j = 0; j < m; ++j)
    for (Index t = 0; t < band.t_points.size(); ++t)
      C(t, j) = model.cond_cdf(band.t_points[t], latent.points[j]);

  Vector base(m);
  for (Index j = 0; j < m; ++j)
    base[j] = target.M * std::abs(h.h_plus[j] - h.h_minus[j]);
  if (weighted)
    for (Index j = 0; j < m; ++j)
      base[j] += target.M_prime * std::abs(h.h_plus[j] - (*wbar)[j]);

  std::vector<Vector> objectives;
  if (!weighted) {
    objectives.push_back(base);
  } else {
    Vector delta = h.h_plus - *wbar;
    objectives.push_back(base + target.M_prime * delta);
    objectives.push_back(base - target.M_prime * delta);
  }

  BiasBoundResult out;
  bool any = false;
  for (const Vector& q : objectives) {
    // a zero objective still runs the solve so band infeasibility surfaces
    IpResult sol = solve_cc_lp(q, h.h_plus, C, band);
    if (sol.status == IpStatus::Infeasible)
      throw SolverError(
          "worst_case_bias: no latent-grid distribution satisfies the band "
          "(latent grid too narrow for the data)");
    if (sol.status == IpStatus::Unbounded)
      throw SolverError(
          "worst_case_bias: fractional program is unbounded (h_plus lacks "
          "positive band-feasible mass)");
    // Accept on the certified quantities: returned points are primal
    // feasible to 1e-9 with a closed complementarity gap. The dual residual
    // may floor above its tolerance when the band rows are degenerate.
    bool certified = sol.primal_residual <= 1e-9 && sol.rel_gap <= 1e-7 &&
                     sol.dual_residual <= 1e-4;
    if (!sol.ok() && !certified)
      throw SolverError("worst_case_bias: solver failed with status " +
                        to_string(sol.status));
    double value = q.lpNorm<Eigen::Infinity>() == 0.0 ? 0.0 : -sol.objective;
    if (!any || value > out.b_hat) {
      out.b_hat = value;
      out.lp_iterations = sol.iterations;
      out.lp_primal_residual = sol.primal_residual;
      out.lp_rel_gap = sol.rel_gap;
      any = true;
    }
  }
  out.b_hat = std::max(out.b_hat, 0.0);
  return out;
}

}  // namespace noisyrd
