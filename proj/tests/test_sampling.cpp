#include <cmath>
#include <vector>

#include <doctest.h>

#include "gpconc/conditioning.hpp"
#include "gpconc/errors.hpp"
#include "gpconc/sampling.hpp"

using namespace gpconc;

namespace {

KernelSpec three_mode_kernel(const PointSet& grid) {
  const auto cov = FiniteRankCov::random({1.0, 0.3, 0.05}, {1, 1, 1}, grid.size(), 8);
  const Eigen::MatrixXd k = cov.kernel_matrix(0, 3);
  return KernelSpec::tabulated(grid, 0.5 * (k + k.transpose()));
}

}  // namespace

TEST_CASE("spectral model of an exact finite-rank kernel") {
  const PointSet grid = PointSet::uniform_grid(1, 16);
  const auto model = build_spectral_model(three_mode_kernel(grid), grid, 1e-6);
  REQUIRE(model.rank() == 3);
  CHECK(model.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.eigenvalues[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(model.eigenvalues[2] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(model.discarded <= 1e-12);
}

TEST_CASE("spectral model of the Gaussian kernel") {
  const PointSet grid = PointSet::uniform_grid(1, 257);
  const auto model = build_spectral_model(KernelSpec::gaussian(1), grid, 1e-6);
  CHECK(model.rank() < 20);
  CHECK(model.discarded / model.trace <= 1e-6);
  CHECK(model.trace == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t j = 1; j < model.rank(); ++j) CHECK(model.eigenvalues[j] <= model.eigenvalues[j - 1]);
  for (std::size_t a = 0; a < model.rank(); ++a) {
    for (std::size_t b = 0; b <= a; ++b) {
      double ip = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) ip += model.weight * model.eigenfunctions[a][i] * model.eigenfunctions[b][i];
      CHECK(std::fabs(ip - (a == b ? 1.0 : 0.0)) < 1e-8);
    }
  }
  CHECK_THROWS_AS(build_spectral_model(KernelSpec::gaussian(1), grid, 0.2), Error);
}

TEST_CASE("sample paths are reproducible per stream") {
  const PointSet grid = PointSet::uniform_grid(1, 65);
  const auto model = build_spectral_model(KernelSpec::matern(2.0, 1), grid, 1e-6);
  RngStream a(42, 7);
  RngStream b(42, 7);
  RngStream c(42, 8);
  const auto pa = sample_path(model, a);
  const auto pb = sample_path(model, b);
  const auto pc = sample_path(model, c);
  CHECK(pa.values == pb.values);
  CHECK(pa.values != pc.values);
  CHECK(pa.seed == 42);
  CHECK(pa.stream == 7);
  for (double v : pa.values) CHECK(std::isfinite(v));
}

TEST_CASE("sampled covariance matches the model") {
  const PointSet grid = PointSet::uniform_grid(1, 17);
  const auto model = build_spectral_model(KernelSpec::matern(2.0, 1), grid, 1e-6);
  const std::size_t m = grid.size();
  const std::size_t N = 10000;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < N; ++r) {
    RngStream rng(5, r);
    const auto p = sample_path(model, rng);
    const Eigen::Map<const Eigen::VectorXd> v(p.values.data(), static_cast<Eigen::Index>(m));
    acc.noalias() += v * v.transpose();
  }
  acc /= static_cast<double>(N);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(acc.rows(), acc.cols());
  for (std::size_t j = 0; j < model.rank(); ++j) {
    const Eigen::Map<const Eigen::VectorXd> phi(model.eigenfunctions[j].data(), static_cast<Eigen::Index>(m));
    expected.noalias() += model.eigenvalues[j] * phi * phi.transpose();
  }
  int outside = 0;
  for (Eigen::Index i = 0; i < acc.rows(); ++i) {
    for (Eigen::Index j = 0; j < acc.cols(); ++j) {
      const double sd = std::sqrt((expected(i, i) * expected(j, j) + expected(i, j) * expected(i, j)) / N);
      outside += std::fabs(acc(i, j) - expected(i, j)) > 5.0 * sd;
    }
  }
  CHECK(outside == 0);
  for (Eigen::Index i = 0; i < acc.rows(); ++i) {
    CHECK(expected(i, i) <= 1.0 + 1e-12);
    CHECK(expected(i, i) >= 1.0 - model.max_tail_sd * model.max_tail_sd - 1e-12);
  }
}

TEST_CASE("sup error edge cases") {
  const PointSet grid = PointSet::uniform_grid(1, 17);
  const auto spec = KernelSpec::matern(2.0, 1);
  const auto model = build_spectral_model(spec, grid, 1e-6);
  RngStream rng(1, 0);
  const auto path = sample_path(model, rng);

  DesignState empty(spec);
  double sup = 0.0;
  for (double v : path.values) sup = std::max(sup, std::fabs(v));
  CHECK(sup_error(path, grid, empty) == sup);

  DesignState full(spec);
  for (std::size_t i = 0; i < grid.size(); ++i) full.add_point(grid[i]);
  CHECK(sup_error(path, grid, full) <= 1e-8);

  const PointSet sparse(1, {0.0, 0.1, 0.2, 1.0});
  const SamplePath sparse_path{{0.3, -0.2, 0.5, 1.0}};
  DesignState off(spec);
  off.add_point(std::vector<double>{0.6});
  try {
    (void)sup_error(sparse_path, sparse, off);
    FAIL("expected design-not-on-grid");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DesignNotOnGrid);
  }
}

TEST_CASE("newton-basis residuals match kriging sup errors") {
  const PointSet grid = PointSet::uniform_grid(1, 129);
  const auto spec = KernelSpec::matern(2.0, 1);
  const auto basis = newton_basis(spec, grid, 12, Precision::Double, 1e-14);
  const auto model = build_spectral_model(spec, grid, 1e-8);
  const std::vector<std::size_t> schedule = {0, 1, 3, 6, 12};
  for (std::uint64_t r = 0; r < 5; ++r) {
    RngStream rng(9, r);
    const auto path = sample_path(model, rng);
    const auto errs = conditional_sup_errors(basis, path.values, schedule);
    REQUIRE(errs.size() == schedule.size());
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      DesignState s(spec);
      for (std::size_t i = 0; i < schedule[k]; ++i) s.add_point(grid[basis.indices[i]]);
      CHECK(errs[k] == doctest::Approx(sup_error(path, grid, s)).epsilon(1e-8));
    }
  }
  const std::vector<std::size_t> too_far = {13};
  CHECK_THROWS_AS(conditional_sup_errors(basis, std::vector<double>(grid.size(), 0.0), too_far), Error);
}

TEST_CASE("newton residual sups equal the conditioned exact process") {
  const PointSet grid = PointSet::uniform_grid(1, 65);
  const auto basis = newton_basis(KernelSpec::gaussian(1), grid, 10, Precision::Double, 1e-14);
  const std::vector<std::size_t> schedule = {0, 2, 5, 10};
  for (std::uint64_t r = 0; r < 4; ++r) {
    RngStream a(3, r);
    RngStream b(3, r);
    const auto path = sample_path(basis, a);
    const auto via_path = conditional_sup_errors(basis, path.values, schedule);
    const auto direct = newton_residual_sups(basis, b, schedule);
    for (std::size_t k = 0; k + 1 < schedule.size(); ++k) {
      CHECK(direct[k] == doctest::Approx(via_path[k]).epsilon(1e-8));
    }
    CHECK(direct.back() == 0.0);
  }
}

TEST_CASE("average sup error decreases along nested greedy designs") {
  const PointSet grid = PointSet::uniform_grid(1, 129);
  const auto spec = KernelSpec::matern(2.0, 1);
  const auto basis = newton_basis(spec, grid, 30, Precision::Double, 1e-14);
  const std::vector<std::size_t> schedule = {0, 1, 2, 4, 8, 16, 30};
  const auto model = build_spectral_model(spec, grid, 1e-8);
  std::vector<double> mean(schedule.size(), 0.0);
  for (std::uint64_t r = 0; r < 40; ++r) {
    RngStream rng(12, r);
    const auto path = sample_path(model, rng);
    const auto e = conditional_sup_errors(basis, path.values, schedule);
    for (std::size_t k = 0; k < e.size(); ++k) mean[k] += e[k] / 40.0;
  }
  // single paths may get worse after one more point; the average may not
  for (std::size_t k = 1; k < mean.size(); ++k) CHECK(mean[k] < mean[k - 1]);
  CHECK(mean.back() < 0.05 * mean.front());
}
