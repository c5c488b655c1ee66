#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>
#include <doctest.h>

#include "gpconc/errors.hpp"
#include "gpconc/kernels.hpp"
#include "gpconc/rng.hpp"

using namespace gpconc;

namespace {

double rel_err(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

PointSet random_points(std::size_t dim, std::size_t count, std::uint64_t seed) {
  RngStream rng(seed, 0);
  PointSet pts(dim);
  while (pts.size() < count) {
    std::vector<double> p(dim);
    for (double& x : p) x = rng.uniform();
    pts.push_back(p);
  }
  return pts;
}

}  // namespace

TEST_CASE("bessel K matches the standard library") {
  for (double nu : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 2.7, 3.5, 5.0, 8.25}) {
    for (double x : {1e-3, 0.01, 0.1, 0.5, 1.0, 1.9, 2.0, 2.1, 3.0, 7.5, 20.0, 60.0}) {
      CAPTURE(nu);
      CAPTURE(x);
      CHECK(rel_err(bessel_k(nu, x), std::cyl_bessel_k(nu, x)) < 1e-11);
    }
  }
}

TEST_CASE("bessel K half-integer closed forms") {
  for (double x : {1e-3, 0.2, 1.0, 2.0, 4.0, 12.0}) {
    const double k_half = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x);
    CHECK(rel_err(bessel_k(0.5, x), k_half) < 1e-12);
    CHECK(rel_err(bessel_k(1.5, x), k_half * (1.0 + 1.0 / x)) < 1e-12);
    CHECK(rel_err(bessel_k(2.5, x), k_half * (1.0 + 3.0 / x + 3.0 / (x * x))) < 1e-12);
  }
}

TEST_CASE("bessel K rejects bad arguments") {
  CHECK_THROWS_AS(bessel_k(-0.5, 1.0), Error);
  CHECK_THROWS_AS(bessel_k(1.0, 0.0), Error);
}

TEST_CASE("matern half-integer closed forms agree with the Bessel route") {
  for (unsigned p : {0u, 1u, 2u, 3u}) {
    const double nu = p + 0.5;
    for (double r = 1e-3; r <= 3.0; r *= 1.31) {
      CAPTURE(p);
      CAPTURE(r);
      CHECK(rel_err(matern_correlation(nu, r), matern_half_integer(p, r)) < 1e-10);
    }
  }
  CHECK(matern_half_integer(0, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(matern_correlation(0.5, 1.0) == doctest::Approx(0.367879441171442).epsilon(1e-12));
  CHECK(matern_half_integer(1, 0.7) == doctest::Approx(1.7 * std::exp(-0.7)).epsilon(1e-15));
}

TEST_CASE("kernel values at zero distance and continuity") {
  const std::vector<double> t = {0.3};
  const auto gauss = KernelSpec::gaussian(1);
  CHECK(eval_kernel(gauss, t, t) == 1.0);
  for (double s : {1.5, 2.0, 2.3, 4.0}) {
    const auto m = KernelSpec::matern(s, 1);
    CHECK(eval_kernel(m, t, t) == 1.0);
    const std::vector<double> near = {0.3 + 1e-12};
    CHECK(std::fabs(eval_kernel(m, t, near) - 1.0) < 1e-6);
  }
}

TEST_CASE("kernel parameter and domain errors") {
  CHECK_THROWS_AS(KernelSpec::matern(1.0, 1), Error);
  CHECK_THROWS_AS(KernelSpec::matern(2.0, 2), Error);
  const auto m = KernelSpec::matern(2.0, 1);
  const std::vector<double> inside = {0.5};
  const std::vector<double> outside = {1.5};
  try {
    (void)eval_kernel(m, inside, outside);
    FAIL("expected a domain error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Domain);
  }
  PointSet pts(1);
  pts.push_back(inside);
  CHECK_THROWS_AS(pts.push_back(std::vector<double>{0.5 + 1e-12}), Error);
}

TEST_CASE("gram matrix examples") {
  PointSet one(1);
  one.push_back(std::vector<double>{0.4});
  const Eigen::MatrixXd g1 = gram_matrix(KernelSpec::matern(2.0, 1), one);
  CHECK(g1.rows() == 1);
  CHECK(g1(0, 0) == 1.0);

  PointSet ends(1, {0.0, 1.0});
  const Eigen::MatrixXd g = gram_matrix(KernelSpec::gaussian(1), ends);
  CHECK(g(0, 0) == 1.0);
  CHECK(g(1, 1) == 1.0);
  CHECK(g(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(g(1, 0) == g(0, 1));
}

TEST_CASE("kernels are symmetric and positive semidefinite") {
  const std::vector<KernelSpec> specs = {KernelSpec::gaussian(1), KernelSpec::gaussian(2), KernelSpec::matern(2.0, 1),
                                         KernelSpec::matern(1.7, 1), KernelSpec::matern(2.5, 2)};
  std::uint64_t seed = 10;
  for (const auto& spec : specs) {
    const PointSet pts = random_points(spec.dim(), 64, seed++);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) CHECK(eval_kernel(spec, pts[i], pts[j]) == eval_kernel(spec, pts[j], pts[i]));
    }
    const Eigen::MatrixXd g = gram_matrix(spec, pts);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(g, Eigen::EigenvaluesOnly);
    CHECK(solver.eigenvalues().minCoeff() >= -1e-8 * g.trace());
  }
}

TEST_CASE("uniform grid layout") {
  const PointSet g = PointSet::uniform_grid(2, 3);
  CHECK(g.size() == 9);
  CHECK(g[1][0] == 0.0);
  CHECK(g[1][1] == 0.5);
  CHECK(g[8][0] == 1.0);
  CHECK(g.find(std::vector<double>{0.5, 1.0}) == 5);
  CHECK(g.find(std::vector<double>{0.25, 1.0}) == g.size());
}

TEST_CASE("tabulated kernel evaluates at nodes only") {
  PointSet nodes(1, {0.0, 0.5, 1.0});
  Eigen::MatrixXd t(3, 3);
  t << 2, 1, 0, 1, 2, 1, 0, 1, 2;
  const auto spec = KernelSpec::tabulated(nodes, t);
  CHECK(eval_kernel(spec, nodes[0], nodes[1]) == 1.0);
  CHECK_THROWS_AS(eval_kernel(spec, nodes[0], std::vector<double>{0.25}), Error);
  Eigen::MatrixXd asym = t;
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(KernelSpec::tabulated(nodes, asym), Error);
}
