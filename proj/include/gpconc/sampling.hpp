#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gpconc/conditioning.hpp"
#include "gpconc/kernels.hpp"
#include "gpconc/rng.hpp"

namespace gpconc {

/// Nyström discretisation of the covariance operator on a uniform grid with
/// weight 1/m per node, truncated to the smallest rank whose discarded
/// spectral mass meets the tail budget.
struct SpectralModel {
  PointSet grid{1};
  double weight = 0.0;
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenfunctions;  // grid samples, unit norm in L2(weight)
  double trace = 0.0;
  double discarded = 0.0;
  double tail_budget = 0.0;
  double max_tail_sd = 0.0;  // largest pointwise standard deviation of the discarded part

  [[nodiscard]] std::size_t rank() const noexcept { return eigenvalues.size(); }
};

SpectralModel build_spectral_model(const KernelSpec& spec, const PointSet& grid, double tail_budget,
                                   double rank_tol = 1e-12);

struct SamplePath {
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// sum_j sqrt(lambda_j) xi_j phi_j with xi drawn from the stream in order.
SamplePath sample_path(const SpectralModel& model, RngStream& rng);

/// Exact grid process sum_j xi_j u_j of a Newton basis.
SamplePath sample_path(const NewtonBasis& basis, RngStream& rng);

/// Largest deviation over the grid between the path and its kriging
/// interpolant through the design points, which must lie within half a grid
/// spacing of grid nodes.
double sup_error(const SamplePath& path, const PointSet& grid, const DesignState& state);

/// Sup norm of path minus its conditional expectation given the values at
/// the first n greedy points of basis, for each n of a nondecreasing schedule.
std::vector<double> conditional_sup_errors(const NewtonBasis& basis, std::span<const double> path,
                                           std::span<const std::size_t> schedule);

/// Draws xi_1..xi_J for the Newton-basis process and returns the sup norm of
/// sum_{j>n} xi_j u_j for each n of the schedule. The tail is accumulated
/// from the last term backwards so small residuals carry no cancellation.
std::vector<double> newton_residual_sups(const NewtonBasis& basis, RngStream& rng,
                                         std::span<const std::size_t> schedule);

}  // namespace gpconc
