#include <doctest.h>

#include <cmath>

#include "noisyrd/simulation.hpp"

using namespace noisyrd;

TEST_CASE("setup 2 constants are recovered by root finding") {
  Setup2Constants c = setup2_constants();
  CHECK(c.k == doctest::Approx(1.6635182955).epsilon(1e-6));
  CHECK(c.p == doctest::Approx(0.2506628275).epsilon(1e-9));
}

TEST_CASE("setup 1 marginals are symmetric") {
  SetupSpec spec;
  spec.id = 1;
  spec.n = 1000000;
  spec.nu2 = 1.0;
  spec.seed = 31337;
  GeneratedBatch gb = generate(spec);
  CHECK(gb.tau == 0.25);
  CHECK(gb.batch.w.mean() == doctest::Approx(0.5).epsilon(0.004));
  CHECK(gb.batch.z.mean() == doctest::Approx(0.0).epsilon(0.01));
  // w is exactly the assignment indicator
  gb.batch.validate();
}

TEST_CASE("generation is deterministic in the seed") {
  SetupSpec spec;
  spec.id = 3;
  spec.n = 500;
  spec.K = 50;
  spec.seed = 777;
  GeneratedBatch a = generate(spec);
  GeneratedBatch b = generate(spec);
  CHECK(a.batch.z == b.batch.z);
  CHECK(a.batch.y == b.batch.y);
  spec.seed = 778;
  GeneratedBatch c = generate(spec);
  CHECK(a.batch.z != c.batch.z);
}

TEST_CASE("binomial setups draw integer counts with the right cutoff") {
  SetupSpec spec;
  spec.id = 4;
  spec.n = 2000;
  spec.K = 100;
  spec.seed = 5;
  GeneratedBatch gb = generate(spec);
  CHECK(gb.tau == 0.0);
  CHECK(gb.batch.cutoff == 60.0);
  for (Index i = 0; i < gb.batch.size(); ++i) {
    CHECK(gb.batch.z[i] == std::floor(gb.batch.z[i]));
    CHECK(gb.batch.z[i] >= 0.0);
    CHECK(gb.batch.z[i] <= 100.0);
  }
}

TEST_CASE("oracle response ranges") {
  SetupSpec s1;
  s1.id = 1;
  CHECK(s1.oracle_M() == doctest::Approx(0.25));
  SetupSpec s2;
  s2.id = 2;
  CHECK(s2.oracle_M() == doctest::Approx(0.15));
  SetupSpec s3;
  s3.id = 3;
  CHECK(s3.oracle_M() == doctest::Approx(0.25));
  SetupSpec s4;
  s4.id = 4;
  // half the range of sin(9u)/3 over [0.5, 0.9]; the sine reaches both
  // extremes inside the interval
  CHECK(s4.oracle_M() == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("monte carlo harness replays bit for bit") {
  SetupSpec spec;
  spec.id = 3;
  spec.n = 400;
  spec.K = 50;
  MCOptions opt;
  opt.M = 1.0;
  opt.grid.u_points = 150;
  MCResult a = run_mc(spec, opt, 12, 900);
  MCResult b = run_mc(spec, opt, 12, 900);
  CHECK(a.coverage == b.coverage);
  CHECK(a.mean_length == b.mean_length);
  CHECK(a.mae == b.mae);
  CHECK(a.mean_B_hat == b.mean_B_hat);
  CHECK(a.failures == 0);
  CHECK(a.replications == 12);
  CHECK(a.weights_reused);
  CHECK(a.mean_length > 0.0);
  CHECK(a.coverage >= 0.5);
}
