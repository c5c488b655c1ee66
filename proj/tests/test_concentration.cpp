#include <cmath>
#include <vector>

#include <doctest.h>

#include "gpconc/concentration.hpp"
#include "gpconc/errors.hpp"

using namespace gpconc;

TEST_CASE("chi-square tail bound examples") {
  const WeightSeq unit = WeightSeq::finite({1.0});
  CHECK(chisq_tail_bound(unit, 1.0) == 4.0);
  const WeightSeq zero = WeightSeq::finite({0.0, 0.0});
  CHECK(zero.is_zero());
  for (double tau : {0.1, 1.0, 7.0}) CHECK(chisq_tail_bound(zero, tau) == 0.0);

  const WeightSeq half = WeightSeq::geometric(0.5);
  const double exact = 2.0 / std::sqrt(3.0) + 1.0;
  const double got = chisq_tail_bound(half, 1.0);
  CHECK(got >= exact * (1.0 - 1e-15));
  CHECK(got == doctest::Approx(2.154700538).epsilon(1e-9));
  CHECK_THROWS_AS(chisq_tail_bound(unit, 0.0), Error);
}

TEST_CASE("massart radius") {
  CHECK(massart_tail_radius(2.0, 2.0, 1.0) == 4.0);
  for (const WeightSeq& b : {WeightSeq::geometric(0.3, 2.0), WeightSeq::polynomial(2.0), WeightSeq::finite({0.2, 1.5, 0.7})}) {
    for (double tau : {0.5, 1.0, 3.0}) {
      const double m = massart_tail_radius(2.0 * b.l2() * b.l2(), 2.0 * b.linf(), tau);
      CHECK(std::fabs(m - chisq_tail_bound(b, tau)) <= 1e-12 * m);
    }
  }
  CHECK(massart_tail_radius(2.0, 2.0, 1e-12) < 1e-5);
  CHECK_THROWS_AS(massart_tail_radius(0.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(massart_tail_radius(1.0, -1.0, 1.0), Error);
}

TEST_CASE("weight norms are ordered") {
  std::vector<WeightSeq> seqs = {WeightSeq::geometric(0.5),          WeightSeq::geometric(0.99, 0.1),
                                 WeightSeq::polynomial(1.1),         WeightSeq::polynomial(2.0, 3.0),
                                 WeightSeq::finite({0.0, 3.0, 1.0}), WeightSeq::finite_random(40, 3)};
  for (const auto& b : seqs) {
    CAPTURE(b.label());
    CHECK(b.linf() <= b.l2() * (1.0 + 1e-12));
    CHECK(b.l2() <= b.l1() * (1.0 + 1e-12));
    for (std::size_t j = 1; j < 50; ++j) CHECK(b(j) >= 0.0);
  }
  const WeightSeq p = WeightSeq::polynomial(2.0);
  const double pi2_6 = M_PI * M_PI / 6.0;
  CHECK(p.l1() >= pi2_6);
  CHECK(p.l1() == doctest::Approx(pi2_6).epsilon(1e-6));
  CHECK(p.l2() * p.l2() >= std::pow(M_PI, 4) / 90.0);
  CHECK_THROWS_AS(WeightSeq::geometric(1.0), Error);
  CHECK_THROWS_AS(WeightSeq::polynomial(1.0), Error);
  CHECK_THROWS_AS(WeightSeq::finite({1.0, -0.1}), Error);
}

TEST_CASE("finite random weights are reproducible") {
  const WeightSeq a = WeightSeq::finite_random(16, 5);
  const WeightSeq b = WeightSeq::finite_random(16, 5);
  const WeightSeq c = WeightSeq::finite_random(16, 6);
  for (std::size_t j = 1; j <= 16; ++j) {
    CHECK(a(j) == b(j));
    CHECK(a(j) > 0.0);
    CHECK(a(j) < 1.0);
  }
  CHECK(a(1) != c(1));
  CHECK(a(17) == 0.0);
}

TEST_CASE("truncation length meets the tolerance") {
  for (const WeightSeq& b : {WeightSeq::geometric(0.5), WeightSeq::polynomial(2.0), WeightSeq::polynomial(1.2)}) {
    for (double tol : {1e-2, 1e-3, 1e-5}) {
      const std::size_t J = b.truncation_length(tol);
      CHECK(std::sqrt(2.0 * b.tail_square_sum(J)) < tol);
      if (J > 0) CHECK(std::sqrt(2.0 * b.tail_square_sum(J - 1)) >= tol);
    }
  }
}

TEST_CASE("sampled Z has chi-square moments") {
  const std::size_t N = 100000;
  const WeightSeq unit = WeightSeq::finite({1.0});
  double s = 0.0;
  double s2 = 0.0;
  for (std::size_t r = 0; r < N; ++r) {
    RngStream rng(31, r);
    const double z = sample_Z(unit, rng, 1e-3);
    s += z;
    s2 += z * z;
  }
  const double mean = s / N;
  const double var = s2 / N - mean * mean;
  CHECK(std::fabs(mean) <= 5.0 * std::sqrt(2.0 / N));
  CHECK(std::fabs(var - 2.0) <= 5.0 * std::sqrt(56.0 / N));

  const WeightSeq half = WeightSeq::geometric(0.5);
  double g = 0.0;
  for (std::size_t r = 0; r < N; ++r) {
    RngStream rng(32, r);
    g += sample_Z(half, rng, 1e-4);
  }
  CHECK(std::fabs(g / N) <= 5.0 * std::sqrt((2.0 / 3.0) / N));

  RngStream rng(1, 1);
  CHECK(sample_Z(WeightSeq::finite({0.0}), rng, 1e-3) == 0.0);
  CHECK_THROWS_AS(sample_Z(unit, rng, 0.0), Error);

  RngStream again_a(8, 8);
  RngStream again_b(8, 8);
  CHECK(sample_Z(half, again_a, 1e-3) == sample_Z(half, again_b, 1e-3));
}

TEST_CASE("violation rates") {
  const WeightSeq unit = WeightSeq::finite({1.0});
  const ViolationRate v = mc_violation_rate(unit, 1.0, 100000, 2024);
  const double p = std::erfc(std::sqrt(2.5));
  CHECK(p == doctest::Approx(0.02535).epsilon(1e-3));
  CHECK(std::fabs(v.rate - p) <= 3.0 * std::sqrt(p * (1.0 - p) / 1e5));
  CHECK(v.rate <= std::exp(-1.0));
  CHECK(v.bound == 4.0);
  CHECK(v.violations == static_cast<std::size_t>(std::lround(v.rate * 1e5)));
  CHECK(v.ci_halfwidth == doctest::Approx(3.0 * std::sqrt(v.rate * (1.0 - v.rate) / 1e5)));

  const ViolationRate far = mc_violation_rate(unit, 10.0, 100000, 7);
  CHECK(far.rate <= violation_threshold(10.0, 100000));

  const ViolationRate zero = mc_violation_rate(WeightSeq::finite({0.0}), 1.0, 1000, 7);
  CHECK(zero.bound == 0.0);
  CHECK(zero.rate == 0.0);
}

TEST_CASE("violation rates do not depend on the worker count") {
  const WeightSeq b = WeightSeq::polynomial(2.0);
  const ViolationRate one = mc_violation_rate(b, 0.5, 20000, 99, 1e-3, 1);
  const ViolationRate four = mc_violation_rate(b, 0.5, 20000, 99, 1e-3, 4);
  CHECK(one.violations == four.violations);
  CHECK(one.rate == four.rate);
}

TEST_CASE("violation threshold") {
  const double t = violation_threshold(1.0, 2000);
  const double p = std::exp(-1.0);
  CHECK(t == doctest::Approx(p + 3.0 * std::sqrt(p * (1.0 - p) / 2000.0)).epsilon(1e-15));
}
