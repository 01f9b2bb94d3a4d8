#include <doctest.h>

#include <cmath>

#include "noisyrd/math.hpp"
#include "noisyrd/rng.hpp"
#include "noisyrd/targets.hpp"

using namespace noisyrd;

namespace {

struct Fixture {
  NoiseModel model = NoiseModel::binomial(30);
  double cutoff = 18.0;
  GridPair grids;
  PilotDensity pilot;
  Vector samples;

  Fixture() {
    grids = build_grids(model, model.default_window(cutoff), cutoff,
                        GridOptions{});
    Rng rng(77);
    samples.resize(600);
    for (Index i = 0; i < samples.size(); ++i)
      samples[i] = rng.binomial(30, rng.uniform(0.4, 0.8));
    pilot = npmle_em(samples, model, grids, 300, 1e-9);
  }
};

}  // namespace

TEST_CASE("rd_param with a point-mass pilot is self-normalizing") {
  Fixture f;
  // place all pilot mass on the atom nearest u* and query c' where the
  // density is positive
  PilotDensity point = f.pilot;
  point.g_bar.setZero();
  Index star = f.grids.latent.count() / 2;
  point.g_bar[star] = 1.0;

  TargetSpec spec;
  spec.kind = TargetSpec::Kind::RDParamAt;
  spec.c_prime = 18.0;
  spec.M = 1.0;
  spec.M_prime = 0.5;
  WbarResult w = make_wbar(spec, f.model, f.grids, point, f.cutoff, f.samples);
  CHECK(w.wbar[star] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(w.mixed_sign);

  // strictly positive on the whole grid
  CHECK(w.wbar.minCoeff() > 0.0);
}

TEST_CASE("rd_param normalizes to one under its own pilot") {
  Fixture f;
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::RDParamAt;
  spec.c_prime = 17.0;
  spec.M = 1.0;
  WbarResult w = make_wbar(spec, f.model, f.grids, f.pilot, f.cutoff, f.samples);
  CHECK(w.wbar.dot(f.pilot.g_bar) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rd_param outside the data support errors") {
  Fixture f;
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::RDParamAt;
  spec.c_prime = 1e9;
  CHECK_THROWS_WITH_AS(
      (void)make_wbar(spec, f.model, f.grids, f.pilot, f.cutoff, f.samples),
      doctest::Contains("outside data support"), std::invalid_argument);
}

TEST_CASE("cutoff_change single-atom interval is the density at c-1") {
  Fixture f;
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::CutoffChange;
  spec.c_prime = f.cutoff - 1.0;
  WbarResult w = make_wbar(spec, f.model, f.grids, f.pilot, f.cutoff, f.samples);

  Index hits = 0;
  for (Index i = 0; i < f.samples.size(); ++i)
    if (f.samples[i] >= spec.c_prime && f.samples[i] < f.cutoff) ++hits;
  double fhat = double(hits) / double(f.samples.size());
  for (Index j = 0; j < f.grids.latent.count(); ++j) {
    double expect = f.model.density(17.0, f.grids.latent.points[j]) / fhat;
    CHECK(w.wbar[j] == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(w.wbar.minCoeff() >= 0.0);
}

TEST_CASE("cutoff_change weights vanish in the tails faster than the kernel") {
  Fixture f;
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::CutoffChange;
  spec.c_prime = 15.0;
  WbarResult w = make_wbar(spec, f.model, f.grids, f.pilot, f.cutoff, f.samples);
  // interval mass at the grid's endpoints is far below its value at the
  // center (ratio test against the one-point kernel)
  Index m = f.grids.latent.count();
  double mid = w.wbar[m / 2];
  CHECK(w.wbar[0] < 0.05 * mid);
  CHECK(w.wbar[m - 1] < 0.05 * mid);
}

TEST_CASE("cutoff_change with an empty interval errors") {
  Fixture f;
  TargetSpec spec;
  spec.kind = TargetSpec::Kind::CutoffChange;
  spec.c_prime = f.cutoff - 1.0;
  Vector far = Vector::Constant(10, 29.0);  // nothing lands in [c', c)
  CHECK_THROWS_WITH_AS(
      (void)make_wbar(spec, f.model, f.grids, f.pilot, f.cutoff, far),
      doctest::Contains("no sample falls"), std::invalid_argument);
}

TEST_CASE("noise_change: null policy, mixed sign, and gaussian-only") {
  NoiseModel g = NoiseModel::gaussian(1.0);
  GridPair grids = build_grids(g, g.default_window(0.0), 0.0, GridOptions{});
  Rng rng(7);
  Vector z(400);
  for (Index i = 0; i < z.size(); ++i) z[i] = rng.normal(rng.uniform(-2, 2), 1.0);
  PilotDensity pilot = npmle_em(z, g, grids, 200, 1e-8);

  TargetSpec null_spec;
  null_spec.kind = TargetSpec::Kind::NoiseChange;
  null_spec.nu_prime = 1.0;
  CHECK_THROWS_WITH_AS((void)make_wbar(null_spec, g, grids, pilot, 0.0, z),
                       doctest::Contains("null policy"), std::invalid_argument);

  TargetSpec halve;
  halve.kind = TargetSpec::Kind::NoiseChange;
  halve.nu_prime = 0.5;
  WbarResult w = make_wbar(halve, g, grids, pilot, 0.0, z);
  CHECK(w.mixed_sign);
  // matches the cdf-difference form up to the pilot normalizer
  Vector raw(grids.latent.count());
  for (Index j = 0; j < grids.latent.count(); ++j) {
    double u = grids.latent.points[j];
    raw[j] = normal_cdf((0.0 - u) / 0.5) - normal_cdf(0.0 - u);
  }
  double khat = raw.dot(pilot.g_bar);
  for (Index j = 0; j < grids.latent.count(); ++j)
    CHECK(w.wbar[j] == doctest::Approx(raw[j] / khat).epsilon(1e-10));

  NoiseModel b = NoiseModel::binomial(10);
  GridPair bg = build_grids(b, b.default_window(6.0), 6.0, GridOptions{});
  CHECK_THROWS_AS((void)make_wbar(halve, b, bg, pilot, 6.0, z),
                  std::invalid_argument);
}

TEST_CASE("target invariants are validated") {
  NoiseModel g = NoiseModel::gaussian(1.0);
  TargetSpec bad;
  bad.kind = TargetSpec::Kind::CutoffChange;
  bad.c_prime = 0.5;  // must be < cutoff = 0
  CHECK_THROWS_AS(validate_target(bad, g, 0.0), std::invalid_argument);

  TargetSpec negM;
  negM.M = -1.0;
  CHECK_THROWS_AS(validate_target(negM, g, 0.0), std::invalid_argument);
}
