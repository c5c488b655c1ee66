#include "gpconc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "gpconc/errors.hpp"
#include "gpconc/simd.hpp"

namespace gpconc {

namespace {

void check_schedule(std::span<const std::size_t> schedule, std::size_t limit) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (i > 0 && schedule[i] < schedule[i - 1]) {
      throw Error(ErrorKind::InvalidParameter, "schedule must be nondecreasing");
    }
    if (schedule[i] > limit) {
      throw Error(ErrorKind::IndexOutOfRange, "schedule entry " + std::to_string(schedule[i]) +
                                                  " exceeds the available basis size " + std::to_string(limit));
    }
  }
}

}  // namespace

SpectralModel build_spectral_model(const KernelSpec& spec, const PointSet& grid, double tail_budget,
                                   double rank_tol) {
  if (!(tail_budget > 0.0 && tail_budget <= 0.05)) {
    throw Error(ErrorKind::InvalidParameter, "tail budget must lie in (0, 0.05]");
  }
  const std::size_t m = grid.size();
  const double w = 1.0 / static_cast<double>(m);
  const Eigen::MatrixXd gram = gram_matrix(spec, grid);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(w * gram);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::NumericalBreakdown, "Nystrom eigensolve failed");

  SpectralModel model;
  model.grid = grid;
  model.weight = w;
  model.tail_budget = tail_budget;
  model.trace = w * gram.trace();

  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();
  const double inv_sqrt_w = 1.0 / std::sqrt(w);
  double kept = 0.0;
  bool met = false;
  for (Eigen::Index k = values.size(); k-- > 0;) {
    const double lambda = values(k);
    if (!(lambda > rank_tol * model.trace)) break;
    kept += lambda;
    model.eigenvalues.push_back(lambda);
    std::vector<double> phi(m);
    for (std::size_t i = 0; i < m; ++i) phi[i] = vectors(static_cast<Eigen::Index>(i), k) * inv_sqrt_w;
    model.eigenfunctions.push_back(std::move(phi));
    if ((model.trace - kept) <= tail_budget * model.trace) {
      met = true;
      break;
    }
  }
  if (!met) {
    throw Error(ErrorKind::TailBudgetUnreachable, "retained spectrum misses the tail budget");
  }
  model.discarded = std::max(0.0, model.trace - kept);

  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double var = gram(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < model.rank(); ++j) {
      var -= model.eigenvalues[j] * model.eigenfunctions[j][i] * model.eigenfunctions[j][i];
    }
    worst = std::max(worst, var);
  }
  model.max_tail_sd = std::sqrt(worst);
  return model;
}

SamplePath sample_path(const SpectralModel& model, RngStream& rng) {
  SamplePath path{std::vector<double>(model.grid.size(), 0.0), rng.seed(), rng.stream()};
  for (std::size_t j = 0; j < model.rank(); ++j) {
    const double coeff = std::sqrt(model.eigenvalues[j]) * rng.normal();
    simd::axpy(coeff, model.eigenfunctions[j], path.values);
  }
  return path;
}

SamplePath sample_path(const NewtonBasis& basis, RngStream& rng) {
  const std::size_t m = basis.columns.empty() ? 0 : basis.columns.front().size();
  SamplePath path{std::vector<double>(m, 0.0), rng.seed(), rng.stream()};
  for (const auto& col : basis.columns) simd::axpy(rng.normal(), col, path.values);
  return path;
}

double sup_error(const SamplePath& path, const PointSet& grid, const DesignState& state) {
  if (path.values.size() != grid.size()) throw Error(ErrorKind::DimensionMismatch, "path and grid sizes differ");
  if (state.size() == 0) return simd::abs_max(path.values);

  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < grid.size(); ++i) spacing = std::min(spacing, squared_distance(grid[0], grid[i]));
  spacing = std::sqrt(spacing);

  std::vector<double> obs(state.size());
  for (std::size_t k = 0; k < state.size(); ++k) {
    const auto x = state.points()[k];
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double d2 = squared_distance(grid[i], x);
      if (d2 < best) {
        best = d2;
        nearest = i;
      }
    }
    if (std::sqrt(best) > 0.5 * spacing) {
      throw Error(ErrorKind::DesignNotOnGrid, "design point " + std::to_string(k) + " is not on the path grid");
    }
    obs[k] = path.values[nearest];
  }
  const std::vector<double> w = state.interpolation_weights(obs);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double interp = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) interp += w[k] * eval_kernel(state.spec(), grid[i], state.points()[k]);
    worst = std::max(worst, std::fabs(path.values[i] - interp));
  }
  return worst;
}

std::vector<double> conditional_sup_errors(const NewtonBasis& basis, std::span<const double> path,
                                           std::span<const std::size_t> schedule) {
  check_schedule(schedule, basis.indices.size());
  std::vector<double> residual(path.begin(), path.end());
  std::vector<double> out;
  out.reserve(schedule.size());
  std::size_t next = 0;
  for (std::size_t n = 0; next < schedule.size(); ++n) {
    while (next < schedule.size() && schedule[next] == n) {
      out.push_back(simd::abs_max(residual));
      ++next;
    }
    if (next == schedule.size()) break;
    const auto& u = basis.columns[n];
    const std::size_t idx = basis.indices[n];
    const double beta = residual[idx] / u[idx];
    simd::axpy(-beta, u, residual);
  }
  return out;
}

std::vector<double> newton_residual_sups(const NewtonBasis& basis, RngStream& rng,
                                         std::span<const std::size_t> schedule) {
  const std::size_t terms = basis.columns.size();
  check_schedule(schedule, terms);
  std::vector<double> xi(terms);
  rng.fill_normal(xi);
  const std::size_t m = terms == 0 ? 0 : basis.columns.front().size();
  std::vector<double> residual(m, 0.0);
  std::vector<double> out(schedule.size(), 0.0);
  std::size_t pending = schedule.size();
  for (std::size_t j = terms + 1; j-- > 0;) {
    // residual currently holds sum_{k >= j} xi_k u_k
    while (pending > 0 && schedule[pending - 1] == j) {
      out[pending - 1] = simd::abs_max(residual);
      --pending;
    }
    if (j == 0 || pending == 0) break;
    simd::axpy(xi[j - 1], basis.columns[j - 1], residual);
  }
  return out;
}

}  // namespace gpconc
