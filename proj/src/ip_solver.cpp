#include "noisyrd/ip_solver.hpp"
#include <cstdio>
#include <cstdlib>

#include <algorithm>
#include <cmath>
#include <limits>

namespace noisyrd {

namespace {

double inf_norm(const Vector& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

// Largest alpha in (0, 1] keeping v + alpha * dv nonnegative.
double max_step(const Vector& v, const Vector& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

bool finite(const Vector& v) { return v.size() == 0 || v.allFinite(); }

struct Workspace {
  Matrix H;
  Eigen::LLT<Matrix> llt;
  Matrix HinvAt;  // H^{-1} A'
  Matrix schur;   // A H^{-1} A'
  Eigen::LDLT<Matrix> schur_ldlt;
};

}  // namespace

std::string to_string(IpStatus status) {
  switch (status) {
    case IpStatus::Optimal: return "optimal";
    case IpStatus::Infeasible: return "infeasible";
    case IpStatus::Unbounded: return "unbounded";
    case IpStatus::MaxIter: return "max_iterations";
    case IpStatus::Numerical: return "numerical_problem";
  }
  return "unknown";
}

IpResult solve_ip(const IpProblem& prob, const IpOptions& opt) {
  const Index n = prob.c.size();
  const Index m = prob.G.rows();
  const Index p = prob.A.rows();
  const bool nn = prob.nonneg;

  if (prob.Q.size() != 0 && (prob.Q.rows() != n || prob.Q.cols() != n))
    throw std::invalid_argument("solve_ip: Q dimension mismatch");
  if (m > 0 && prob.G.cols() != n)
    throw std::invalid_argument("solve_ip: G dimension mismatch");
  if (p > 0 && prob.A.cols() != n)
    throw std::invalid_argument("solve_ip: A dimension mismatch");

  const bool has_q = prob.Q.size() != 0;

  Matrix Q = prob.Q;
  Vector c = prob.c;
  Matrix G = prob.G;
  Vector h = prob.h;
  Matrix A = prob.A;
  Vector b = prob.b;

  // Column equilibration: balances variables of very different natural
  // scales (tiny curvature columns against slack-like columns).
  Vector cscale = Vector::Ones(n);
  for (Index j = 0; j < n && !std::getenv("NOISYRD_IP_NO_COLSCALE"); ++j) {
    double mx = has_q ? std::abs(Q(j, j)) : 0.0;
    if (p > 0) mx = std::max(mx, A.col(j).lpNorm<Eigen::Infinity>());
    if (m > 0) mx = std::max(mx, G.col(j).lpNorm<Eigen::Infinity>());
    cscale[j] = std::clamp(std::sqrt(mx), 1e-8, 1e8);
  }
  if (has_q) {
    Q = cscale.cwiseInverse().asDiagonal() * Q *
        cscale.cwiseInverse().asDiagonal();
  }
  c = c.cwiseQuotient(cscale);
  if (p > 0) A = A * cscale.cwiseInverse().asDiagonal();
  if (m > 0) G = G * cscale.cwiseInverse().asDiagonal();

  // Objective normalization so the relative gap is measured against an
  // O(1) objective.
  double obj_scale = 1.0;
  if (!std::getenv("NOISYRD_IP_NO_OBJSCALE")) {
    double mag = c.size() ? c.lpNorm<Eigen::Infinity>() : 0.0;
    if (has_q) mag = std::max(mag, Q.diagonal().lpNorm<Eigen::Infinity>());
    if (mag > 1e-12) obj_scale = 1.0 / mag;
    if (has_q) Q *= obj_scale;
    c *= obj_scale;
  }

  // Row equilibration of the constraint blocks.
  Vector gscale = Vector::Ones(m), ascale = Vector::Ones(p);
  for (Index i = 0; i < m; ++i) {
    double s = G.row(i).lpNorm<Eigen::Infinity>();
    if (s > 1e-12) {
      gscale[i] = s;
      G.row(i) /= s;
      h[i] /= s;
    }
  }
  for (Index i = 0; i < p; ++i) {
    double s = A.row(i).lpNorm<Eigen::Infinity>();
    if (s > 1e-12) {
      ascale[i] = s;
      A.row(i) /= s;
      b[i] /= s;
    }
  }

  // Starting point.
  Vector x = nn ? Vector::Ones(n) : Vector::Zero(n);
  Vector y = Vector::Zero(p);
  Vector s(m), z(m), w;
  if (m > 0) {
    Vector slack = h - G * x;
    for (Index i = 0; i < m; ++i) s[i] = std::max(1.0, std::abs(slack[i]));
    z = Vector::Ones(m);
  }
  if (nn) w = Vector::Ones(n);

  const double bnorm = 1.0 + inf_norm(b);
  const double hnorm = 1.0 + inf_norm(h);
  const double cnorm = 1.0 + inf_norm(c);

  Workspace ws;
  ws.H.resize(n, n);

  IpResult res;
  Vector r_d(n), r_p(p), r_g(m);
  Vector rhs_x(n), dx(n), dy(p), ds(m), dz(m), dw, dx_aff(n), ds_aff(m),
      dz_aff(m), dw_aff;
  if (nn) {
    dw.resize(n);
    dw_aff.resize(n);
  }

  // best iterate seen so far (score = worst of the three relative measures)
  double best_score = std::numeric_limits<double>::infinity();
  Vector best_x = x, best_y = y, best_z = z;
  double best_rp = 1.0, best_rd = 1.0, best_gap = 1.0;
  int best_iter = 0;

  double mu_prev = std::numeric_limits<double>::infinity();
  int stall = 0;

  // objective of the scaled problem (used for convergence measures)
  auto primal_obj = [&](const Vector& xx) {
    double v = c.dot(xx);
    if (has_q) v += 0.5 * xx.dot(Q.selfadjointView<Eigen::Lower>() * xx);
    return v;
  };
  // objective of the original problem at an unscaled point
  auto true_obj = [&](const Vector& xx) {
    double v = prob.c.dot(xx);
    if (has_q) v += 0.5 * xx.dot(prob.Q.selfadjointView<Eigen::Lower>() * xx);
    return v;
  };

  auto factorize = [&](const Vector& dg, const Vector& dxdiag) -> bool {
    if (has_q)
      ws.H = Q;
    else
      ws.H.setZero();
    if (m > 0) {
      Matrix Gs = dg.cwiseSqrt().asDiagonal() * G;
      ws.H.selfadjointView<Eigen::Lower>().rankUpdate(Gs.transpose());
    }
    if (nn) ws.H.diagonal() += dxdiag;
    // absolute regularization on the equilibrated data; scaling it by the
    // barrier-inflated diagonal would distort the dual equation late in the
    // solve
    double reg = opt.static_reg;
    for (int attempt = 0; attempt < 4; ++attempt) {
      Matrix Hr = ws.H;
      Hr.diagonal().array() += reg;
      ws.llt.compute(Hr);  // LLT reads the lower triangle
      if (ws.llt.info() == Eigen::Success) {
        if (p > 0) {
          ws.HinvAt = ws.llt.solve(A.transpose());
          ws.schur = A * ws.HinvAt;
          ws.schur_ldlt.compute(ws.schur);
        }
        return true;
      }
      reg *= 1e3;
    }
    return false;
  };

  auto kkt_solve = [&](const Vector& rx, const Vector& rp, Vector& out_dx,
                       Vector& out_dy) {
    if (p > 0) {
      Vector Hinv_rx = ws.llt.solve(rx);
      out_dy = ws.schur_ldlt.solve(A * Hinv_rx - rp);
      out_dx = Hinv_rx - ws.HinvAt * out_dy;
      Vector res_x = rx - ws.H.selfadjointView<Eigen::Lower>() * out_dx -
                     A.transpose() * out_dy;
      Vector res_p = rp - A * out_dx;
      Vector cx = ws.llt.solve(res_x);
      Vector cy = ws.schur_ldlt.solve(A * cx - res_p);
      out_dy += cy;
      out_dx += cx - ws.HinvAt * cy;
    } else {
      out_dx = ws.llt.solve(rx);
      Vector res_x = rx - ws.H.selfadjointView<Eigen::Lower>() * out_dx;
      out_dx += ws.llt.solve(res_x);
    }
  };

  auto finish = [&](IpStatus status_if_bad) {
    // fall back to the best iterate when the current one is worse or broken
    res.x = best_x.cwiseQuotient(cscale);
    res.eq_dual = (best_y.array() / ascale.array() / obj_scale).matrix();
    res.ineq_dual =
        m > 0 ? Vector((best_z.array() / gscale.array() / obj_scale).matrix())
              : Vector();
    res.objective = true_obj(res.x);
    res.primal_residual = best_rp;
    res.dual_residual = best_rd;
    res.rel_gap = best_gap;
    res.iterations = best_iter;
    if (best_rp <= opt.tol_feas && best_rd <= opt.tol_dual &&
        best_gap <= opt.tol_gap)
      res.status = IpStatus::Optimal;
    else
      res.status = status_if_bad;
  };

  for (int iter = 0; iter <= opt.max_iter; ++iter) {
    if (!finite(x) || !finite(s) || !finite(z) || (nn && !finite(w))) {
      finish(IpStatus::Numerical);
      return res;
    }

    r_d = c;
    double dual_scale = cnorm;
    if (has_q) {
      Vector qx = Q.selfadjointView<Eigen::Lower>() * x;
      dual_scale = std::max(dual_scale, 1.0 + inf_norm(qx));
      r_d += qx;
    }
    if (p > 0) {
      Vector aty = A.transpose() * y;
      dual_scale = std::max(dual_scale, 1.0 + inf_norm(aty));
      r_d += aty;
    }
    if (m > 0) {
      Vector gtz = G.transpose() * z;
      dual_scale = std::max(dual_scale, 1.0 + inf_norm(gtz));
      r_d += gtz;
    }
    if (nn) {
      dual_scale = std::max(dual_scale, 1.0 + inf_norm(w));
      r_d -= w;
    }
    if (p > 0) r_p = A * x - b;
    if (m > 0) r_g = G * x + s - h;

    double gap = (m > 0 ? s.dot(z) : 0.0) + (nn ? x.dot(w) : 0.0);
    Index gap_dim = m + (nn ? n : 0);
    double mu = gap_dim > 0 ? gap / static_cast<double>(gap_dim) : 0.0;

    double obj = primal_obj(x);
    double rp_rel = std::max(p > 0 ? inf_norm(r_p) / bnorm : 0.0,
                             m > 0 ? inf_norm(r_g) / hnorm : 0.0);
    double rd_rel = inf_norm(r_d) / dual_scale;
    double gap_rel = gap / (1.0 + std::abs(obj));

    if (std::getenv("NOISYRD_IP_TRACE"))
      std::fprintf(stderr,
                   "it=%3d mu=%9.2e rp=%9.2e rd=%9.2e gap=%9.2e obj=%9.2e "
                   "|rd|=%9.2e |z|=%9.2e\n",
                   iter, mu, rp_rel, rd_rel, gap_rel, obj, inf_norm(r_d),
                   inf_norm(z));

    // tolerance-normalized score so the kept iterate is the best on the
    // quantities being certified
    double score = std::max({rp_rel / opt.tol_feas, rd_rel / opt.tol_dual,
                             gap_rel / opt.tol_gap});
    if (std::isfinite(score) && score < best_score) {
      best_score = score;
      best_x = x;
      best_y = y;
      best_z = z;
      best_rp = rp_rel;
      best_rd = rd_rel;
      best_gap = gap_rel;
      best_iter = iter;
    }
    if (iter - best_iter > 25) {  // no headway in a long while
      finish(IpStatus::MaxIter);
      return res;
    }
    // primal side and gap converged; the dual residual has plateaued at its
    // attainable floor (degenerate duals) -- stop before iterates degrade
    if (rp_rel <= opt.tol_feas && gap_rel <= opt.tol_gap &&
        iter - best_iter > 6) {
      finish(IpStatus::MaxIter);
      return res;
    }

    if (rp_rel <= opt.tol_feas && rd_rel <= opt.tol_dual &&
        gap_rel <= opt.tol_gap) {
      finish(IpStatus::Optimal);
      return res;
    }

    double xs_norm = inf_norm(x);
    double dual_norm = std::max(inf_norm(y), inf_norm(z));
    if (xs_norm > 1e13 || dual_norm > 1e13 || stall >= 15) {
      if (rp_rel <= 1e-6 && (obj < -1e10 || xs_norm > 1e13))
        res.status = IpStatus::Unbounded;
      else if (rp_rel > 1e-6)
        res.status = IpStatus::Infeasible;
      else {
        finish(IpStatus::Numerical);
        return res;
      }
      res.x = x.cwiseQuotient(cscale);
      res.eq_dual = (y.array() / ascale.array() / obj_scale).matrix();
      res.ineq_dual =
          m > 0 ? Vector((z.array() / gscale.array() / obj_scale).matrix())
                : Vector();
      res.objective = true_obj(res.x);
      res.primal_residual = rp_rel;
      res.dual_residual = rd_rel;
      res.rel_gap = gap_rel;
      res.iterations = iter;
      return res;
    }
    if (iter == opt.max_iter) {
      finish(IpStatus::MaxIter);
      return res;
    }

    double progress = std::max(mu, rp_rel);
    if (progress > 0.99 * mu_prev)
      ++stall;
    else
      stall = 0;
    mu_prev = progress;

    Vector dg, dxdiag;
    if (m > 0)
      dg = z.cwiseQuotient(s).cwiseMax(1e-16).cwiseMin(1e16);
    if (nn)
      dxdiag = w.cwiseQuotient(x).cwiseMax(1e-16).cwiseMin(1e16);
    if (!factorize(dg, dxdiag)) {
      finish(IpStatus::Numerical);
      return res;
    }

    // Predictor (affine) direction.
    rhs_x = -r_d;
    if (m > 0)
      rhs_x -= G.transpose() * (dg.cwiseProduct(r_g) - z).eval();
    if (nn) rhs_x -= w;
    kkt_solve(rhs_x, p > 0 ? Vector(-r_p) : Vector(), dx_aff, dy);
    if (m > 0) {
      ds_aff = -r_g - G * dx_aff;
      dz_aff = -z - dg.cwiseProduct(ds_aff);
    }
    if (nn) dw_aff = -w - dxdiag.cwiseProduct(dx_aff);
    if (!finite(dx_aff) || !finite(ds_aff) || !finite(dz_aff) ||
        (nn && !finite(dw_aff))) {
      finish(IpStatus::Numerical);
      return res;
    }

    double ap = 1.0, ad = 1.0;
    if (m > 0) {
      ap = std::min(ap, max_step(s, ds_aff));
      ad = std::min(ad, max_step(z, dz_aff));
    }
    if (nn) {
      ap = std::min(ap, max_step(x, dx_aff));
      ad = std::min(ad, max_step(w, dw_aff));
    }
    double mu_aff = 0.0;
    if (gap_dim > 0) {
      double acc = 0.0;
      if (m > 0) acc += (s + ap * ds_aff).dot(z + ad * dz_aff);
      if (nn) acc += (x + ap * dx_aff).dot(w + ad * dw_aff);
      mu_aff = std::max(acc, 0.0) / static_cast<double>(gap_dim);
    }
    double sigma = mu > 0 ? std::pow(mu_aff / mu, 3) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector (combined) direction.
    rhs_x = -r_d;
    Vector r_sz, r_xw;
    if (m > 0) {
      r_sz = (s.cwiseProduct(z).array() - sigma * mu +
              ds_aff.cwiseProduct(dz_aff).array())
                 .matrix();
      rhs_x -= G.transpose() *
               (dg.cwiseProduct(r_g) - r_sz.cwiseQuotient(s)).eval();
    }
    if (nn) {
      r_xw = (x.cwiseProduct(w).array() - sigma * mu +
              dx_aff.cwiseProduct(dw_aff).array())
                 .matrix();
      rhs_x -= r_xw.cwiseQuotient(x);
    }
    kkt_solve(rhs_x, p > 0 ? Vector(-r_p) : Vector(), dx, dy);
    // recover with the same clipped diagonals used to build H, so the dual
    // equation holds for the direction exactly
    if (m > 0) {
      ds = -r_g - G * dx;
      dz = -r_sz.cwiseQuotient(s) - dg.cwiseProduct(ds);
    }
    if (nn) dw = -r_xw.cwiseQuotient(x) - dxdiag.cwiseProduct(dx);
    if (!finite(dx) || !finite(ds) || !finite(dz) || (nn && !finite(dw))) {
      finish(IpStatus::Numerical);
      return res;
    }

    auto step_lengths = [&](double& out_p, double& out_d) {
      out_p = 1.0;
      out_d = 1.0;
      if (m > 0) {
        out_p = std::min(out_p, max_step(s, ds));
        out_d = std::min(out_d, max_step(z, dz));
      }
      if (nn) {
        out_p = std::min(out_p, max_step(x, dx));
        out_d = std::min(out_d, max_step(w, dw));
      }
    };
    step_lengths(ap, ad);

    // Gondzio centrality correctors: push outlying complementarity products
    // toward sigma*mu to enlarge the step; reuses the factorization.
    for (int round = 0; round < 3; ++round) {
      double atp = std::min(ap + 0.1, 1.0), atd = std::min(ad + 0.1, 1.0);
      // target the complementarity level of the trial step, not sigma*mu:
      // after a long affine step the latter collapses and over-corrects
      double mu_t = 0.0;
      {
        double acc = 0.0;
        if (m > 0) acc += (s + atp * ds).dot(z + atd * dz);
        if (nn) acc += (x + atp * dx).dot(w + atd * dw);
        mu_t = std::max(acc, 0.0) / static_cast<double>(gap_dim);
      }
      constexpr double beta_lo = 0.1, beta_hi = 10.0;
      Vector t_sz, t_xw;
      bool outliers = false;
      if (m > 0) {
        t_sz.setZero(m);
        for (Index i = 0; i < m; ++i) {
          double v = (s[i] + atp * ds[i]) * (z[i] + atd * dz[i]);
          double clamped = std::clamp(v, beta_lo * mu_t, beta_hi * mu_t);
          t_sz[i] = clamped - v;
          if (t_sz[i] != 0.0) outliers = true;
        }
      }
      if (nn) {
        t_xw.setZero(n);
        for (Index i = 0; i < n; ++i) {
          double v = (x[i] + atp * dx[i]) * (w[i] + atd * dw[i]);
          double clamped = std::clamp(v, beta_lo * mu_t, beta_hi * mu_t);
          t_xw[i] = clamped - v;
          if (t_xw[i] != 0.0) outliers = true;
        }
      }
      if (!outliers) break;

      // pure centrality correction: zero residuals, complementarity rhs -t
      Vector rhs_c = Vector::Zero(n);
      if (m > 0) rhs_c += G.transpose() * t_sz.cwiseQuotient(s);
      if (nn) rhs_c += t_xw.cwiseQuotient(x);
      Vector cdx(n), cdy(p);
      kkt_solve(rhs_c, p > 0 ? Vector(Vector::Zero(p)) : Vector(), cdx, cdy);
      Vector cds, cdz, cdw;
      if (m > 0) {
        cds = -(G * cdx).eval();
        cdz = t_sz.cwiseQuotient(s) - dg.cwiseProduct(cds);
      }
      if (nn) cdw = t_xw.cwiseQuotient(x) - dxdiag.cwiseProduct(cdx);
      if (!finite(cdx) || (m > 0 && (!finite(cds) || !finite(cdz))) ||
          (nn && !finite(cdw)))
        break;

      Vector ndx = dx + cdx, ndy = dy + cdy;
      Vector nds, ndz, ndw;
      if (m > 0) {
        nds = ds + cds;
        ndz = dz + cdz;
      }
      if (nn) ndw = dw + cdw;

      double np = 1.0, nd = 1.0;
      if (m > 0) {
        np = std::min(np, max_step(s, nds));
        nd = std::min(nd, max_step(z, ndz));
      }
      if (nn) {
        np = std::min(np, max_step(x, ndx));
        nd = std::min(nd, max_step(w, ndw));
      }
      if (np < ap + 0.01 && nd < ad + 0.01) break;  // no useful gain
      dx = ndx;
      dy = ndy;
      if (m > 0) {
        ds = nds;
        dz = ndz;
      }
      if (nn) dw = ndw;
      ap = np;
      ad = nd;
    }

    const double tau = opt.tau;
    ap = std::min(1.0, tau * ap);
    ad = std::min(1.0, tau * ad);

    if (ap < 1e-11 && ad < 1e-11) ++stall;

    x += ap * dx;
    y += ad * dy;
    if (m > 0) {
      s += ap * ds;
      z += ad * dz;
    }
    if (nn) w += ad * dw;
  }

  finish(IpStatus::Numerical);
  return res;
}

}  // namespace noisyrd
