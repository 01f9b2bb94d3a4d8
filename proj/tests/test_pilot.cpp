#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "noisyrd/grids.hpp"
#include "noisyrd/math.hpp"
#include "noisyrd/pilot.hpp"
#include "noisyrd/rng.hpp"

using namespace noisyrd;

namespace {

GridPair binomial_grids(int trials, double cutoff) {
  NoiseModel m = NoiseModel::binomial(trials);
  return build_grids(m, m.default_window(cutoff), cutoff, GridOptions{});
}

}  // namespace

TEST_CASE("EM concentrates on a repeated observation") {
  const int trials = 20;
  NoiseModel m = NoiseModel::binomial(trials);
  GridPair grids = binomial_grids(trials, 10.0);
  const double u_star = 0.5;  // z = round(trials * u_star) = 10 repeated
  Vector z = Vector::Constant(200, 10.0);

  PilotDensity pilot = npmle_em(z, m, grids, 500, 1e-12);
  double near = 0.0;
  for (Index j = 0; j < grids.latent.count(); ++j)
    if (std::abs(grids.latent.points[j] - u_star) <= 0.05)
      near += pilot.g_bar[j];
  CHECK(near >= 0.9);
}

TEST_CASE("one EM iteration matches the closed-form update") {
  // 2 atoms, 2 samples, single step from the uniform start
  NoiseModel m = NoiseModel::gaussian(1.0);
  GridPair grids;
  grids.latent.points = Vector(2);
  grids.latent.points << -0.7, 0.9;
  grids.running = build_running_grid(m, Interval{-2.0, 2.0}, 0.0, 16);

  Vector z(2);
  z << -0.2, 0.55;

  PilotDensity one = npmle_em(z, m, grids, 1, 1e-15);

  // hand-computed update: g_j' = 0.5 * (1/n) sum_i p_ij / f_i
  double p00 = m.density(z[0], -0.7), p01 = m.density(z[0], 0.9);
  double p10 = m.density(z[1], -0.7), p11 = m.density(z[1], 0.9);
  double f0 = 0.5 * (p00 + p01), f1 = 0.5 * (p10 + p11);
  double g0 = 0.5 * 0.5 * (p00 / f0 + p10 / f1);
  double g1 = 0.5 * 0.5 * (p01 / f0 + p11 / f1);
  CHECK(one.g_bar[0] == doctest::Approx(g0).epsilon(1e-12));
  CHECK(one.g_bar[1] == doctest::Approx(g1).epsilon(1e-12));
  CHECK(one.iterations == 1);
}

TEST_CASE("infinite tolerance returns the uniform start") {
  NoiseModel m = NoiseModel::gaussian(1.0);
  GridPair grids;
  grids.latent = build_latent_grid(m, 0.0, 40, 4.0);
  grids.running = build_running_grid(m, Interval{-3.0, 3.0}, 0.0, 41);
  Rng rng(5);
  Vector z(50);
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal();

  PilotDensity pilot =
      npmle_em(z, m, grids, 100, std::numeric_limits<double>::infinity());
  CHECK(pilot.iterations == 0);
  for (Index j = 0; j < 40; ++j)
    CHECK(pilot.g_bar[j] == doctest::Approx(1.0 / 40.0).epsilon(1e-14));
  // f_bar is the mixture under uniform weights
  double acc = 0.0;
  for (Index j = 0; j < 40; ++j)
    acc += m.density(grids.running.points[0], grids.latent.points[j]) / 40.0;
  CHECK(pilot.f_bar[0] == doctest::Approx(acc).epsilon(1e-12));
}

TEST_CASE("EM log-likelihood is monotone across iteration budgets") {
  NoiseModel m = NoiseModel::gaussian(0.8);
  GridPair grids;
  grids.latent = build_latent_grid(m, 0.0, 60, 4.0);
  grids.running = build_running_grid(m, Interval{-2.4, 2.4}, 0.0, 61);
  Rng rng(17);
  Vector z(300);
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.uniform(-2.0, 2.0);

  double prev = -std::numeric_limits<double>::infinity();
  for (int budget : {1, 2, 4, 8, 16, 32, 64}) {
    PilotDensity p = npmle_em(z, m, grids, budget, 1e-14);
    CHECK(p.loglik >= prev - 1e-12);
    prev = p.loglik;
  }
}

TEST_CASE("EM output is invariant to permuting the samples") {
  NoiseModel m = NoiseModel::gaussian(1.0);
  GridPair grids;
  grids.latent = build_latent_grid(m, 0.0, 50, 4.0);
  grids.running = build_running_grid(m, Interval{-3.0, 3.0}, 0.0, 51);
  Rng rng(23);
  Vector z(120);
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal(0.0, 1.5);

  Vector shuffled = z;
  std::mt19937 mix(9);
  std::shuffle(shuffled.data(), shuffled.data() + shuffled.size(), mix);

  PilotDensity a = npmle_em(z, m, grids, 200, 1e-10);
  PilotDensity b = npmle_em(shuffled, m, grids, 200, 1e-10);
  for (Index j = 0; j < grids.latent.count(); ++j)
    CHECK(a.g_bar[j] == doctest::Approx(b.g_bar[j]).epsilon(1e-10));
}

TEST_CASE("pilot invariants: g sums to one, f_bar consistent") {
  NoiseModel m = NoiseModel::binomial(30);
  GridPair grids = binomial_grids(30, 18.0);
  Rng rng(31);
  Vector z(400);
  for (Index i = 0; i < z.size(); ++i)
    z[i] = rng.binomial(30, rng.uniform(0.4, 0.8));

  PilotDensity p = npmle_em(z, m, grids, 300, 1e-10);
  CHECK(p.g_bar.sum() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(p.g_bar.minCoeff() >= 0.0);
  for (Index k = 0; k < grids.running.count(); ++k) {
    double acc = 0.0;
    for (Index j = 0; j < grids.latent.count(); ++j)
      acc += m.density(grids.running.points[k], grids.latent.points[j]) *
             p.g_bar[j];
    CHECK(p.f_bar[k] == doctest::Approx(acc).epsilon(1e-10));
  }
}

TEST_CASE("zero-marginal sample is rejected") {
  NoiseModel m = NoiseModel::binomial(10);
  GridPair grids = binomial_grids(10, 6.0);
  Vector z(3);
  z << 5.0, 6.0, 4.5;  // non-integer z has zero density everywhere
  CHECK_THROWS_AS(npmle_em(z, m, grids, 10, 1e-8), std::invalid_argument);
}

TEST_CASE("marginal density at a point") {
  NoiseModel m = NoiseModel::gaussian(1.0);
  GridPair grids;
  grids.latent.points = Vector(2);
  grids.latent.points << -1.0, 1.0;
  grids.running = build_running_grid(m, Interval{-2.0, 2.0}, 0.0, 16);

  PilotDensity point;
  point.g_bar = Vector(2);
  point.g_bar << 1.0, 0.0;
  point.latent_points = grids.latent.points;
  CHECK(marginal_density_at(point, m, 0.3) ==
        doctest::Approx(m.density(0.3, -1.0)).epsilon(1e-14));

  PilotDensity half = point;
  half.g_bar << 0.5, 0.5;
  CHECK(marginal_density_at(half, m, 0.3) ==
        doctest::Approx(0.5 * (m.density(0.3, -1.0) + m.density(0.3, 1.0)))
            .epsilon(1e-14));
}

TEST_CASE("EM pilot tracks the true mixture density near the cutoff") {
  // uniform latent over [-3,3] with unit Gaussian noise; truth is
  // (Phi(z+3) - Phi(z-3))/6
  NoiseModel m = NoiseModel::gaussian(1.0);
  GridPair grids;
  grids.latent = build_latent_grid(m, 0.0, 400, 4.0);
  grids.running = build_running_grid(m, Interval{-3.0, 3.0}, 0.0, 400);
  Rng rng(47);
  Vector z(5000);
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal(rng.uniform(-3, 3), 1.0);

  PilotDensity p = npmle_em(z, m, grids, 500, 1e-8);
  double truth = (normal_cdf(3.0) - normal_cdf(-3.0)) / 6.0;
  CHECK(marginal_density_at(p, m, 0.0) ==
        doctest::Approx(truth).epsilon(0.10));

  // and it nearly integrates to one over a wide grid
  RunningGrid wide = build_running_grid(m, Interval{-8.0, 8.0}, 0.0, 1601);
  double mass = 0.0;
  for (Index k = 0; k < wide.count(); ++k)
    mass += marginal_density_at(p, m, wide.points[k]) * wide.lambda_weights[k];
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sigma2 estimates") {
  Rng rng(59);
  const Index n = 10000;
  Vector z(n), y(n), w(n);

  // exact interacted-linear outcomes -> zero residual variance
  for (Index i = 0; i < n; ++i) {
    z[i] = rng.normal();
    w[i] = z[i] >= 0 ? 1.0 : 0.0;
    y[i] = 2.0 + 0.5 * z[i] + 1.5 * w[i] - 0.25 * z[i] * w[i];
  }
  CHECK(estimate_sigma2(z, y, w) <= 1e-20);

  // additive noise with variance 0.25
  for (Index i = 0; i < n; ++i) y[i] = z[i] + rng.normal(0.0, 0.5);
  double s2 = estimate_sigma2(z, y, w);
  CHECK(s2 >= 0.22);
  CHECK(s2 <= 0.28);

  // Bernoulli(0.5) outcomes independent of z
  for (Index i = 0; i < n; ++i) y[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  double sb = estimate_sigma2(z, y, w);
  CHECK(sb == doctest::Approx(0.25).epsilon(0.08));

  // rank-deficient design: all z identical
  Vector zc = Vector::Constant(n, 1.0);
  Vector wc(n);
  for (Index i = 0; i < n; ++i) wc[i] = i % 2 ? 1.0 : 0.0;
  CHECK_THROWS_AS((void)estimate_sigma2(zc, y, wc), std::invalid_argument);
}

TEST_CASE("M heuristic") {
  Rng rng(61);
  const Index n = 5000;
  Vector z(n), y(n), w(n);

  // constant control outcomes -> essentially zero range
  for (Index i = 0; i < n; ++i) {
    z[i] = rng.uniform(-3.0, 3.0);
    w[i] = i < n / 2 ? 0.0 : 1.0;
    y[i] = w[i] == 0.0 ? 0.4 : rng.uniform();
  }
  RangeEstimate flat = estimate_M(z, y, w, Interval{-3.0, 3.0});
  CHECK(flat.m < 0.01);

  // E[Y | Z = z] = 0.3 + 0.25 sin(z): half the fitted range is near 0.25
  for (Index i = 0; i < n; ++i)
    y[i] = rng.bernoulli(0.3 + 0.25 * std::sin(z[i])) ? 1.0 : 0.0;
  RangeEstimate sine = estimate_M(z, y, w, Interval{-3.0, 3.0});
  CHECK(sine.m >= 0.2);
  CHECK(sine.m <= 0.3);

  // small control arm is rejected
  Vector tiny = Vector::Ones(10);
  CHECK_THROWS_AS(
      (void)estimate_M(tiny, tiny, Vector::Zero(10), Interval{0.0, 1.0}),
      std::invalid_argument);
}
