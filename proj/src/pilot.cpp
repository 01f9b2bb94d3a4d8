#include "noisyrd/pilot.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace noisyrd {

namespace {

Matrix likelihood_matrix(const VectorRef& samples_z, const NoiseModel& model,
                         const Vector& atoms) {
  Matrix P(samples_z.size(), atoms.size());
  for (Index j = 0; j < atoms.size(); ++j)
    for (Index i = 0; i < samples_z.size(); ++i)
      P(i, j) = model.density(samples_z[i], atoms[j]);
  return P;
}

double interp_linear(const Vector& x, const Vector& y, double q) {
  if (q <= x[0]) return y[0];
  if (q >= x[x.size() - 1]) return y[y.size() - 1];
  Index hi = std::upper_bound(x.data(), x.data() + x.size(), q) - x.data();
  Index lo = hi - 1;
  double t = (q - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - t) * y[lo] + t * y[hi];
}

}  // namespace

PilotDensity npmle_em(const VectorRef& samples_z, const NoiseModel& model,
                      const GridPair& grids, int max_iter, double tol) {
  const Index n = samples_z.size();
  const Index m = grids.latent.count();
  if (n < 2) throw std::invalid_argument("npmle_em: need at least 2 samples");
  if (max_iter < 1) throw std::invalid_argument("npmle_em: max_iter must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("npmle_em: tol must be > 0");

  Matrix P = likelihood_matrix(samples_z, model, grids.latent.points);
  for (Index i = 0; i < n; ++i)
    if (P.row(i).maxCoeff() <= 0.0)
      throw std::invalid_argument(
          "npmle_em: a sample has zero marginal density under every grid "
          "atom (grid/window mismatch)");

  Vector g = Vector::Constant(m, 1.0 / static_cast<double>(m));
  Vector f = P * g;
  double loglik = f.array().log().sum();
  int iters = 0;

  Vector ratio(n), g_next(m);
  for (int it = 0; it < max_iter; ++it) {
    ratio = f.cwiseInverse();
    g_next = g.cwiseProduct(P.transpose() * ratio) / static_cast<double>(n);
    g_next /= g_next.sum();  // guard against accumulated rounding
    Vector f_next = P * g_next;
    double ll_next = f_next.array().log().sum();
    if (!(ll_next - loglik >= tol)) break;
    g = g_next;
    f = f_next;
    loglik = ll_next;
    ++iters;
  }

  PilotDensity pilot;
  pilot.g_bar = g;
  pilot.loglik = loglik;
  pilot.iterations = iters;
  pilot.latent_points = grids.latent.points;
  const Vector& zs = grids.running.points;
  pilot.f_bar.resize(zs.size());
  for (Index k = 0; k < zs.size(); ++k) {
    double acc = 0.0;
    for (Index j = 0; j < m; ++j)
      acc += model.density(zs[k], grids.latent.points[j]) * g[j];
    pilot.f_bar[k] = acc;
  }
  return pilot;
}

PilotDensity pilot_from_fbar(const VectorRef& z, const VectorRef& density,
                             const GridPair& grids) {
  if (z.size() != density.size() || z.size() < 2)
    throw std::invalid_argument("pilot_from_fbar: need matching (z, density) columns");
  for (Index i = 1; i < z.size(); ++i)
    if (!(z[i] > z[i - 1]))
      throw std::invalid_argument("pilot_from_fbar: z column must be strictly increasing");
  if (density.minCoeff() < 0.0)
    throw std::invalid_argument("pilot_from_fbar: negative density");

  PilotDensity pilot;
  pilot.user_supplied = true;
  pilot.fbar_z = z;
  pilot.latent_points = grids.latent.points;
  Vector dens = density;
  pilot.f_bar.resize(grids.running.count());
  for (Index k = 0; k < grids.running.count(); ++k)
    pilot.f_bar[k] = interp_linear(pilot.fbar_z, dens, grids.running.points[k]);
  // stash the raw curve for off-grid queries
  pilot.g_bar = Vector();
  pilot.fbar_curve = dens;
  return pilot;
}

double marginal_density_at(const PilotDensity& pilot, const NoiseModel& model,
                           double z) {
  if (pilot.user_supplied)
    return interp_linear(pilot.fbar_z, pilot.fbar_curve, z);
  double acc = 0.0;
  for (Index j = 0; j < pilot.latent_points.size(); ++j)
    acc += model.density(z, pilot.latent_points[j]) * pilot.g_bar[j];
  return acc;
}

double estimate_sigma2(const VectorRef& z, const VectorRef& y,
                       const VectorRef& w) {
  const Index n = z.size();
  if (n < 5 || y.size() != n || w.size() != n)
    throw std::invalid_argument("estimate_sigma2: need n >= 5 matched samples");
  double n_treat = w.sum();
  if (n_treat == 0.0 || n_treat == static_cast<double>(n))
    throw std::invalid_argument("estimate_sigma2: both treatment arms must be nonempty");

  Matrix X(n, 4);
  X.col(0).setOnes();
  X.col(1) = z;
  X.col(2) = w;
  X.col(3) = z.cwiseProduct(w);
  Eigen::ColPivHouseholderQR<Matrix> qr;
  qr.setThreshold(1e-10);
  qr.compute(X);
  if (qr.rank() < 4)
    throw std::invalid_argument("estimate_sigma2: rank-deficient design matrix");
  Vector beta = qr.solve(y);
  Vector resid = y - X * beta;
  return resid.squaredNorm() / static_cast<double>(n);
}

RangeEstimate estimate_M(const VectorRef& z, const VectorRef& y,
                         const VectorRef& w, const Interval& window) {
  const Index n = z.size();
  if (y.size() != n || w.size() != n)
    throw std::invalid_argument("estimate_M: mismatched sample vectors");
  std::vector<double> zc, yc;
  zc.reserve(n);
  yc.reserve(n);
  for (Index i = 0; i < n; ++i)
    if (w[i] == 0.0) {
      zc.push_back(z[i]);
      yc.push_back(y[i]);
    }
  const Index nc = static_cast<Index>(zc.size());
  if (nc < 20)
    throw std::invalid_argument("estimate_M: control arm needs >= 20 observations");

  Eigen::Map<Vector> zcv(zc.data(), nc), ycv(yc.data(), nc);
  double zmin = zcv.minCoeff(), zmax = zcv.maxCoeff();
  double span = std::max(zmax - zmin, 1e-12);

  // leave-one-out CV over a logarithmic bandwidth grid
  const int n_bw = 16;
  double best_bw = -1.0, best_cv = std::numeric_limits<double>::infinity();
  for (int b = 0; b < n_bw; ++b) {
    double bw = span * std::pow(10.0, -2.0 + 2.0 * b / (n_bw - 1.0));  // span*[1e-2, 1]
    double cv = 0.0;
    bool valid = true;
    for (Index i = 0; i < nc; ++i) {
      double num = 0.0, den = 0.0;
      for (Index j = 0; j < nc; ++j) {
        if (j == i) continue;
        double k = std::exp(-0.5 * std::pow((zcv[i] - zcv[j]) / bw, 2));
        num += k * ycv[j];
        den += k;
      }
      if (den <= 1e-300) {
        valid = false;
        break;
      }
      double e = ycv[i] - num / den;
      cv += e * e;
    }
    if (valid && cv < best_cv) {
      best_cv = cv;
      best_bw = bw;
    }
  }

  RangeEstimate out;
  if (best_bw <= 0.0) {
    out.cv_failed = true;
    out.m = 0.5 * (ycv.maxCoeff() - ycv.minCoeff());
    return out;
  }

  // fitted-value range over the weight window
  double lo = std::max(window.lower, zmin), hi = std::min(window.upper, zmax);
  if (!(lo < hi)) {
    lo = zmin;
    hi = zmax;
  }
  const int n_eval = 201;
  double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
  for (int e = 0; e < n_eval; ++e) {
    double q = lo + (hi - lo) * e / (n_eval - 1.0);
    double num = 0.0, den = 0.0;
    for (Index j = 0; j < nc; ++j) {
      double k = std::exp(-0.5 * std::pow((q - zcv[j]) / best_bw, 2));
      num += k * ycv[j];
      den += k;
    }
    if (den <= 1e-300) continue;
    double fit = num / den;
    fmin = std::min(fmin, fit);
    fmax = std::max(fmax, fit);
  }
  if (!(fmax >= fmin)) {
    out.cv_failed = true;
    out.m = 0.5 * (ycv.maxCoeff() - ycv.minCoeff());
    return out;
  }
  out.m = 0.5 * (fmax - fmin);
  return out;
}

}  // namespace noisyrd
