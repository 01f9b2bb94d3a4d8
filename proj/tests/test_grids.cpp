#include <doctest.h>

#include <cmath>

#include "noisyrd/grids.hpp"
#include "noisyrd/math.hpp"

using namespace noisyrd;

TEST_CASE("running grid matches the trapezoid example") {
  NoiseModel g = NoiseModel::gaussian(1.0);
  RunningGrid grid = build_running_grid(g, Interval{-1.0, 1.0}, 0.0, 5);
  REQUIRE(grid.count() == 5);
  double pts[] = {-1.0, -0.5, 0.0, 0.5, 1.0};
  double wts[] = {0.25, 0.5, 0.5, 0.5, 0.25};
  for (int k = 0; k < 5; ++k) {
    CHECK(grid.points[k] == doctest::Approx(pts[k]).epsilon(1e-14));
    CHECK(grid.lambda_weights[k] == doctest::Approx(wts[k]).epsilon(1e-14));
  }
  CHECK(grid.cutoff_index == 2);
}

TEST_CASE("running grid inserts the cutoff when absent") {
  NoiseModel g = NoiseModel::gaussian(1.0);
  RunningGrid grid = build_running_grid(g, Interval{-1.0, 1.0}, 0.1, 16);
  bool found = false;
  for (Index k = 0; k < grid.count(); ++k)
    if (grid.points[k] == doctest::Approx(0.1).epsilon(1e-14)) found = true;
  CHECK(found);
  CHECK(grid.points[grid.cutoff_index] == doctest::Approx(0.1));
  // weights still sum to the window length
  CHECK(grid.lambda_weights.sum() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("binomial running grid is the integer range") {
  NoiseModel b = NoiseModel::binomial(10);
  RunningGrid grid = build_running_grid(b, Interval{3.0, 8.0}, 6.0, 0);
  REQUIRE(grid.count() == 6);
  for (int k = 0; k < 6; ++k) {
    CHECK(grid.points[k] == doctest::Approx(3.0 + k));
    CHECK(grid.lambda_weights[k] == 1.0);
  }
  CHECK(grid.points[grid.cutoff_index] == 6.0);
}

TEST_CASE("quadrature weight sum identity at high resolution") {
  NoiseModel g = NoiseModel::gaussian(0.19);
  double c = std::log(350.0);
  Interval w = g.default_window(c);
  RunningGrid grid = build_running_grid(g, w, c, 400);
  CHECK(grid.lambda_weights.sum() ==
        doctest::Approx(w.length()).epsilon(1e-12));
}

TEST_CASE("one-sided window is rejected") {
  NoiseModel g = NoiseModel::gaussian(1.0);
  CHECK_THROWS_AS(build_running_grid(g, Interval{1.0, 2.0}, 0.0, 32),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_running_grid(g, Interval{-2.0, -1.0}, 0.0, 32),
                  std::invalid_argument);
  // cutoff at the lower edge leaves no minus side
  CHECK_THROWS_AS(build_running_grid(g, Interval{0.0, 1.0}, 0.0, 32),
                  std::invalid_argument);
}

TEST_CASE("latent grid spans") {
  NoiseModel g1 = NoiseModel::gaussian(1.0);
  LatentGrid lg = build_latent_grid(g1, 0.0, 9, 4.0);
  REQUIRE(lg.count() == 9);
  CHECK(lg.points[0] == doctest::Approx(-4.0));
  CHECK(lg.points[8] == doctest::Approx(4.0));

  NoiseModel g05 = NoiseModel::gaussian(0.5);
  LatentGrid lg2 = build_latent_grid(g05, 1.0, 33, 4.0);
  CHECK(lg2.points[0] == doctest::Approx(-1.0));
  CHECK(lg2.points[32] == doctest::Approx(3.0));

  NoiseModel b = NoiseModel::binomial(50);
  LatentGrid lb = build_latent_grid(b, 30.0, 400);
  CHECK(lb.points[0] > 0.0);
  CHECK(lb.points[lb.count() - 1] < 1.0);
  CHECK(lb.points[0] == doctest::Approx((30.0 - 2 * std::sqrt(50.0)) / 50.0));
  for (Index j = 1; j < lb.count(); ++j) CHECK(lb.points[j] > lb.points[j - 1]);
}

TEST_CASE("grid refinement leaves the window integral nearly unchanged") {
  NoiseModel g = NoiseModel::gaussian(1.0);
  Interval w{-3.0, 3.0};
  auto integral = [&](int resolution, double u) {
    RunningGrid grid = build_running_grid(g, w, 0.0, resolution);
    double acc = 0.0;
    for (Index k = 0; k < grid.count(); ++k) {
      double gamma = 1.0 + 0.3 * std::sin(2.0 * grid.points[k]);
      acc += gamma * g.density(grid.points[k], u) * grid.lambda_weights[k];
    }
    return acc;
  };
  for (double u : {-0.5, 0.3, 1.0}) {
    double coarse = integral(400, u);
    double fine = integral(800, u);
    CHECK(std::abs(coarse - fine) / std::abs(fine) < 1e-4);
  }
}
