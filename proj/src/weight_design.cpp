#include "noisyrd/weight_design.hpp"

#include <cmath>
#include <stdexcept>

namespace noisyrd {

namespace {

// kernel(j, k) = p(z_k | u_j) * lambda_k
Matrix kernel_matrix(const NoiseModel& model, const GridPair& grids) {
  const Vector& u = grids.latent.points;
  const Vector& z = grids.running.points;
  const Vector& lam = grids.running.lambda_weights;
  Matrix K(u.size(), z.size());
  for (Index k = 0; k < z.size(); ++k)
    for (Index j = 0; j < u.size(); ++j)
      K(j, k) = model.density(z[k], u[j]) * lam[k];
  return K;
}

}  // namespace

HPair compute_h(const WeightFunction& weights, const NoiseModel& model,
                const GridPair& grids) {
  const RunningGrid& rg = grids.running;
  if (weights.gamma.size() != rg.count())
    throw std::invalid_argument("compute_h: weights not on this running grid");
  Matrix K = kernel_matrix(model, grids);
  Vector gp = weights.gamma, gm = weights.gamma;
  gp.head(rg.cutoff_index).setZero();
  gm.tail(rg.count() - rg.cutoff_index).setZero();
  HPair h;
  h.h_plus = K * gp;
  h.h_minus = K * gm;
  return h;
}

WeightFunction solve_weights(const NoiseModel& model, const GridPair& grids,
                             const PilotDensity& pilot, double sigma2,
                             Index n, const TargetSpec& target,
                             const Vector* wbar, const SolveOptions& opt) {
  const RunningGrid& rg = grids.running;
  const Index K = rg.count();
  const Index m = grids.latent.count();
  const Index ci = rg.cutoff_index;

  if (n < 2) throw std::invalid_argument("solve_weights: n must be >= 2");
  if (pilot.f_bar.size() != K)
    throw std::invalid_argument("solve_weights: pilot not on this running grid");
  if (pilot.f_bar.minCoeff() <= 0.0)
    throw std::invalid_argument(
        "solve_weights: pilot marginal density must be strictly positive on "
        "the window");
  const bool weighted = !target.is_constant();
  if (weighted && (wbar == nullptr || wbar->size() != m))
    throw std::invalid_argument("solve_weights: weighted target needs wbar on "
                                "the latent grid");

  const Index nt = weighted ? 2 : 1;  // t or (t1, t2)
  const Index nv = K + nt;

  Matrix kern = kernel_matrix(model, grids);
  Vector flam = pilot.f_bar.cwiseProduct(rg.lambda_weights);

  IpProblem qp;
  qp.Q = Matrix::Zero(nv, nv);
  for (Index k = 0; k < K; ++k)
    qp.Q(k, k) = 2.0 * sigma2 / static_cast<double>(n) * flam[k];
  if (!weighted) {
    qp.Q(K, K) = 2.0;
  } else {
    qp.Q(K, K) = qp.Q(K + 1, K + 1) = 2.0;
    qp.Q(K, K + 1) = qp.Q(K + 1, K) = 2.0;  // (t1 + t2)^2
  }
  qp.c = Vector::Zero(nv);

  qp.A = Matrix::Zero(2, nv);
  qp.A.row(0).head(ci) = flam.head(ci).transpose();
  qp.A.row(1).segment(ci, K - ci) = flam.tail(K - ci).transpose();
  qp.b = Vector::Constant(2, 1.0);

  const bool box = std::isfinite(opt.box_C);
  const Index n_bias = 2 * m;
  const Index n_track = weighted ? 2 * m : 0;
  const Index n_box = box ? 2 * K : 0;
  qp.G = Matrix::Zero(n_bias + n_track + n_box, nv);
  qp.h = Vector::Zero(qp.G.rows());

  // Imbalance rows: +-M * (h_minus - h_plus)(u_j) <= t (or t1).
  // delta(j, k) = sign_k * kern(j, k), sign +1 below the cutoff, -1 at/above.
  const double M = target.M;
  for (Index j = 0; j < m; ++j) {
    for (Index k = 0; k < K; ++k) {
      double d = M * kern(j, k) * (k < ci ? 1.0 : -1.0);
      qp.G(2 * j, k) = d;
      qp.G(2 * j + 1, k) = -d;
    }
    qp.G(2 * j, K) = -1.0;
    qp.G(2 * j + 1, K) = -1.0;
  }
  if (weighted) {
    const double Mp = target.M_prime;
    for (Index j = 0; j < m; ++j) {
      Index r = n_bias + 2 * j;
      for (Index k = ci; k < K; ++k) {
        qp.G(r, k) = Mp * kern(j, k);
        qp.G(r + 1, k) = -Mp * kern(j, k);
      }
      qp.G(r, K + 1) = -1.0;
      qp.G(r + 1, K + 1) = -1.0;
      qp.h[r] = Mp * (*wbar)[j];
      qp.h[r + 1] = -Mp * (*wbar)[j];
    }
  }
  if (box) {
    double bound = opt.box_C * std::pow(static_cast<double>(n), opt.box_beta);
    for (Index k = 0; k < K; ++k) {
      Index r = n_bias + n_track + 2 * k;
      qp.G(r, k) = 1.0;
      qp.G(r + 1, k) = -1.0;
      qp.h[r] = bound;
      qp.h[r + 1] = bound;
    }
  }

  const double regs[] = {1e-12, 1e-9, 1e-7};
  const double taus[] = {0.995, 0.99, 0.95};
  IpResult sol;
  for (int attempt = 0; attempt < 3; ++attempt) {
    IpOptions ip_opt;
    ip_opt.tol_feas = opt.tol_feas;
    ip_opt.tol_gap = opt.tol_gap;
    ip_opt.static_reg = regs[attempt];
    ip_opt.tau = taus[attempt];
    IpResult trial = solve_ip(qp, ip_opt);
    if (attempt == 0 || trial.rel_gap < sol.rel_gap) sol = trial;
    if (trial.ok() || trial.status == IpStatus::Infeasible) {
      sol = trial;
      break;
    }
    if (trial.primal_residual <= 1e-7 && trial.rel_gap <= 1e-7 &&
        trial.dual_residual <= 1e-4) {
      sol = trial;
      break;
    }
  }
  if (sol.status == IpStatus::Infeasible)
    throw SolverError("solve_weights: infeasible problem (window holds no "
                      "grid points on one side?)");
  // certification per contract: primal feasibility and relative duality gap
  bool certified = sol.primal_residual <= 1e-7 && sol.rel_gap <= 1e-7 &&
                   sol.dual_residual <= 1e-4;
  if (!sol.ok() && !certified)
    throw SolverError("solve_weights: solver failed with status " +
                      to_string(sol.status));
  if (sol.primal_residual > 1e-7 || sol.rel_gap > 1e-7)
    throw SolverError("solve_weights: solution fails the certification "
                      "thresholds (primal feasibility / relative gap)");

  WeightFunction w;
  w.gamma = sol.x.head(K);
  w.window = rg.window;
  w.diagnostics.objective = sol.objective;
  if (!weighted) {
    w.diagnostics.t = sol.x[K];
    w.diagnostics.t1 = sol.x[K];
  } else {
    w.diagnostics.t1 = sol.x[K];
    w.diagnostics.t2 = sol.x[K + 1];
    w.diagnostics.t = sol.x[K] + sol.x[K + 1];
  }
  w.diagnostics.max_abs_gamma = w.gamma.lpNorm<Eigen::Infinity>();
  w.diagnostics.iterations = sol.iterations;
  w.diagnostics.primal_residual = sol.primal_residual;
  w.diagnostics.rel_gap = sol.rel_gap;
  return w;
}

double eval_gamma(const WeightFunction& weights, const RunningGrid& grid,
                  const NoiseModel& model, double z) {
  if (z < weights.window.lower || z > weights.window.upper) return 0.0;
  const Vector& pts = grid.points;
  const Index K = pts.size();
  const Index ci = grid.cutoff_index;

  if (!model.is_gaussian()) {
    // nearest grid point on the sample's own side
    Index lo = z >= grid.cutoff ? ci : 0;
    Index hi = z >= grid.cutoff ? K : ci;
    Index best = lo;
    for (Index k = lo; k < hi; ++k)
      if (std::abs(pts[k] - z) < std::abs(pts[best] - z)) best = k;
    return weights.gamma[best];
  }

  // side-aware linear interpolation; clamp inside the gap next to the cutoff
  Index lo = z >= grid.cutoff ? ci : 0;
  Index hi = z >= grid.cutoff ? K - 1 : ci - 1;
  if (z <= pts[lo]) return weights.gamma[lo];
  if (z >= pts[hi]) return weights.gamma[hi];
  const double* begin = pts.data() + lo;
  const double* end = pts.data() + hi + 1;
  Index right = std::upper_bound(begin, end, z) - pts.data();
  Index left = right - 1;
  double t = (z - pts[left]) / (pts[right] - pts[left]);
  return (1.0 - t) * weights.gamma[left] + t * weights.gamma[right];
}

RegularityReport check_regularity(const WeightFunction& weights,
                                  const GridPair& grids,
                                  const NoiseModel& model,
                                  const VectorRef& samples_z, double delta,
                                  double /*C*/, double beta) {
  const RunningGrid& rg = grids.running;
  const Index n = samples_z.size();
  RegularityReport rep;
  const Index ci = rg.cutoff_index;
  rep.max_abs_gamma_minus =
      weights.gamma.head(ci).lpNorm<Eigen::Infinity>();
  rep.max_abs_gamma_plus =
      weights.gamma.tail(rg.count() - ci).lpNorm<Eigen::Infinity>();

  double sum_p = 0.0, sum_m = 0.0;
  for (Index i = 0; i < n; ++i) {
    double g = eval_gamma(weights, rg, model, samples_z[i]);
    if (samples_z[i] >= rg.cutoff)
      sum_p += g;
    else
      sum_m += g;
  }
  rep.mean_gamma_plus = sum_p / static_cast<double>(n);
  rep.mean_gamma_minus = sum_m / static_cast<double>(n);

  double scale = std::pow(static_cast<double>(n), beta);
  auto ratio = [&](double mx, double mean) {
    return mean > 0.0 ? mx / (scale * mean)
                      : std::numeric_limits<double>::infinity();
  };
  rep.ratio_plus = ratio(rep.max_abs_gamma_plus, rep.mean_gamma_plus);
  rep.ratio_minus = ratio(rep.max_abs_gamma_minus, rep.mean_gamma_minus);
  rep.pass = rep.mean_gamma_plus >= delta && rep.mean_gamma_minus >= delta;
  return rep;
}

}  // namespace noisyrd
