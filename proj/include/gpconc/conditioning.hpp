#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gpconc/kernels.hpp"

namespace gpconc {

/// Kriging state: design points and the lower Cholesky factor of their Gram
/// matrix, extended one bordered row at a time.
class DesignState {
 public:
  static constexpr double kPivotTol = 1e-14;

  explicit DesignState(KernelSpec spec);

  [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] const PointSet& points() const noexcept { return points_; }
  [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }

  /// Appends t in O(n^2). Throws DuplicatePoint or NumericalBreakdown and
  /// leaves the state unchanged on failure.
  void add_point(std::span<const double> t);
  [[nodiscard]] DesignState with_point(std::span<const double> t) const;

  /// k(t,t) - v^T G^{-1} v, clamped to [0, k(t,t)].
  [[nodiscard]] double posterior_variance(std::span<const double> t) const;

  /// v(t)^T G^{-1} obs
  [[nodiscard]] double posterior_mean(std::span<const double> obs, std::span<const double> t) const;

  /// G^{-1} obs, so that the posterior mean at t is sum_i w_i k(t, t_i).
  [[nodiscard]] std::vector<double> interpolation_weights(std::span<const double> obs) const;

  /// Dense copy of the lower Cholesky factor.
  [[nodiscard]] Eigen::MatrixXd cholesky() const;

 private:
  void forward_solve(std::span<double> y) const;
  void backward_solve(std::span<double> y) const;
  [[nodiscard]] std::span<const double> row(std::size_t i) const noexcept {
    return {factor_.data() + i * (i + 1) / 2, i + 1};
  }

  KernelSpec spec_;
  PointSet points_;
  std::vector<double> factor_;  // packed rows of the lower factor
};

/// c_0, c_1, ..., c_N: maximum posterior variance over the candidate grid
/// after each selection.
struct PowerTrace {
  std::vector<double> values;
  std::size_t grid_size = 0;
};

enum class Precision { Double, High };

/// Newton basis of P-greedy (equivalently a diagonally pivoted Cholesky
/// factorisation of the candidate Gram matrix). columns[j] holds u_{j+1} on
/// the candidates, so the posterior variance after n selections is
/// k(t,t) - sum_{j<n} u_{j+1}(t)^2.
struct NewtonBasis {
  std::vector<std::size_t> indices;
  std::vector<std::vector<double>> columns;
  std::vector<double> trace;  // trace[n] = c_n, size indices.size() + 1
  Precision precision = Precision::Double;
};

/// Exhaustion threshold on the power function for each precision.
double exhaustion_tolerance(Precision precision) noexcept;

/// Runs up to max_terms greedy steps and stops quietly once the largest
/// remaining power function drops below stop_tol.
NewtonBasis newton_basis(const KernelSpec& spec, const PointSet& candidates, std::size_t max_terms,
                         Precision precision, double stop_tol);

struct GreedySelection {
  PointSet points;
  std::vector<std::size_t> indices;
  PowerTrace trace;
};

/// Picks the candidate of largest posterior variance N times (lowest index on
/// ties). Throws ExhaustedCandidates if every remaining power function falls
/// below exhaustion_tolerance(precision) before N points are chosen.
GreedySelection pgreedy_select(const KernelSpec& spec, const PointSet& candidates, std::size_t N,
                               Precision precision = Precision::Double);

/// Finite-rank covariance sum_j lambda_j sum_m phi_{j,m} phi_{j,m}^T on a
/// discrete grid with quadrature weights; eigenvalue j has multiplicity dims[j].
class FiniteRankCov {
 public:
  FiniteRankCov(std::vector<double> eigenvalues, std::vector<std::size_t> dims, Eigen::MatrixXd eigenvectors,
                std::vector<double> weights);

  /// Random weighted-orthonormal eigenvectors on a uniform grid of [0,1]
  /// with m nodes and weights 1/m.
  static FiniteRankCov random(std::vector<double> eigenvalues, std::vector<std::size_t> dims, std::size_t grid_points,
                              std::uint64_t seed);

  [[nodiscard]] std::size_t rank() const noexcept { return eigenvalues_.size(); }
  [[nodiscard]] const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
  [[nodiscard]] const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  [[nodiscard]] const Eigen::MatrixXd& eigenvectors() const noexcept { return vectors_; }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }

  /// Grid kernel matrix of the eigen-components first..last-1.
  [[nodiscard]] Eigen::MatrixXd kernel_matrix(std::size_t first, std::size_t last) const;

  /// Largest deviation of the weighted Gram matrix of the eigenvectors from identity.
  [[nodiscard]] double orthonormality_error() const;

 private:
  std::vector<double> eigenvalues_;
  std::vector<std::size_t> dims_;
  Eigen::MatrixXd vectors_;
  std::vector<double> weights_;
};

struct ConditionGap {
  double gap = 0.0;
  bool out_of_range = false;  // n >= rank: everything conditioned away
};

/// Operator-norm gap after conditioning on the first n eigenspaces.
ConditionGap eigen_condition_gap(const FiniteRankCov& cov, std::size_t n);

/// Independent check: weighted operator norm of the grid operator minus its
/// rank-n truncation, from a dense symmetric eigensolve.
double truncation_operator_norm(const FiniteRankCov& cov, std::size_t n);

}  // namespace gpconc
