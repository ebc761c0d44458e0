#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "support/oracles.hpp"
#include "volrank/rng.hpp"
#include "volrank/stats.hpp"

using namespace volrank;
using namespace volrank::stats;

TEST_CASE("normal quantile matches the bisection-on-erf oracle") {
  for (double p : {1e-6, 1e-4, 0.01, 0.025, 0.05, 0.2, 0.5, 0.8, 0.95, 0.975, 0.99, 0.9999}) {
    double got = normal_quantile(p);
    double want = testsupport::probit_bisect(p);
    CHECK(std::abs(got - want) < 1e-9);
  }
  CHECK_THROWS_AS(normal_quantile(0.0), config_error);
  CHECK_THROWS_AS(normal_quantile(1.0), config_error);
}

TEST_CASE("two-sided 5% quantile") {
  CHECK(std::abs(z_two_sided(0.05) - 1.959964) < 1e-5);
  CHECK(std::abs(z_one_sided(0.05) - 1.644854) < 1e-5);
}

TEST_CASE("normal cdf sanity") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(std::abs(normal_cdf(1.959964) - 0.975) < 1e-6);
}

TEST_CASE("ks distance on exact quantile ranks is tiny") {
  const int n = 1000;
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = normal_quantile((i + 0.5) / n);
  auto ks = ks_normal(xs);
  CHECK(ks.distance < 0.001);
  CHECK(ks.p_value > 0.99);
}

TEST_CASE("ks distance of a point mass at zero is one half") {
  std::vector<double> xs(100, 0.0);
  auto ks = ks_normal(xs);
  CHECK(ks.distance == 0.5);
}

TEST_CASE("ks on seeded pseudo-normal draws: golden regression value") {
  NormalRng rng(424242);
  std::vector<double> xs(500);
  for (auto& v : xs) v = rng.normal();
  auto ks = ks_normal(xs);
  CHECK(ks.p_value > 0.01);
  // Frozen values for this seed; any drift in the generator or the KS
  // machinery shows up here first.
  CHECK(ks.distance == Catch::Approx(0.032698932449401835).epsilon(1e-12));
  CHECK(ks.p_value == Catch::Approx(0.6520228557545189).epsilon(1e-12));
}

TEST_CASE("ks rejects a clearly non-normal sample") {
  NormalRng rng(7);
  std::vector<double> xs(500);
  for (auto& v : xs) v = rng.uniform() - 0.5;  // narrow uniform, wrong shape
  auto ks = ks_normal(xs);
  CHECK(ks.p_value < 1e-6);
}

TEST_CASE("ks input validation") {
  CHECK_THROWS_AS(ks_normal(std::vector<double>(10, 0.0)), config_error);
  std::vector<double> bad(30, 0.0);
  bad[3] = std::nan("");
  CHECK_THROWS_AS(ks_normal(bad), config_error);
}

TEST_CASE("two-sample ks separates shifted samples and accepts equal law") {
  NormalRng rng(99);
  std::vector<double> x(2000), y(2000), z(2000);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  for (auto& v : z) v = rng.normal() + 0.5;
  CHECK(ks_two_sample(x, y).p_value > 0.01);
  CHECK(ks_two_sample(x, z).p_value < 1e-6);
}

TEST_CASE("summarize") {
  auto s = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(std::abs(s.sd - std::sqrt(5.0 / 3.0)) < 1e-15);
  CHECK(s.n == 4);
}
