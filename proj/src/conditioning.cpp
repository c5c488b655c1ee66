#include "gpconc/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <type_traits>

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_bin_float.hpp>

#include "gpconc/errors.hpp"
#include "gpconc/rng.hpp"
#include "gpconc/simd.hpp"

namespace gpconc {

namespace {

using HighFloat = boost::multiprecision::number<boost::multiprecision::cpp_bin_float<100>,
                                                boost::multiprecision::et_off>;

template <class T>
std::size_t first_argmax(const std::vector<T>& p) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = i;
  }
  return best;
}

template <class T>
NewtonBasis run_newton(const KernelSpec& spec, const PointSet& candidates, std::size_t max_terms, double stop_tol,
                       Precision precision) {
  using std::sqrt;
  const std::size_t m = candidates.size();
  if (m == 0) throw Error(ErrorKind::InvalidParameter, "empty candidate set");
  if (candidates.dim() != spec.dim()) throw Error(ErrorKind::DimensionMismatch, "candidate and kernel dimension differ");

  std::vector<T> power(m);
  for (std::size_t i = 0; i < m; ++i) power[i] = eval_kernel_as<T>(spec, candidates[i], candidates[i]);

  NewtonBasis out;
  out.precision = precision;
  std::vector<std::vector<T>> basis;
  std::size_t best = first_argmax(power);
  out.trace.push_back(static_cast<double>(power[best]));
  const T threshold(stop_tol);

  while (basis.size() < max_terms && !(power[best] < threshold)) {
    std::vector<T> u(m);
    const auto pivot = candidates[best];
    for (std::size_t i = 0; i < m; ++i) u[i] = eval_kernel_as<T>(spec, candidates[i], pivot);
    for (const auto& prev : basis) {
      const T coeff = prev[best];
      if constexpr (std::is_same_v<T, double>) {
        simd::axpy(-coeff, prev, u);
      } else {
        for (std::size_t i = 0; i < m; ++i) u[i] -= coeff * prev[i];
      }
    }
    const T scale = T(1) / sqrt(power[best]);
    for (auto& v : u) v *= scale;

    const std::size_t chosen = best;
    if constexpr (std::is_same_v<T, double>) {
      best = simd::subtract_squares(power, u);
    } else {
      for (std::size_t i = 0; i < m; ++i) {
        power[i] -= u[i] * u[i];
        if (!(power[i] > 0)) power[i] = 0;
      }
    }
    power[chosen] = 0;
    if constexpr (std::is_same_v<T, double>) {
      if (best == chosen) best = first_argmax(power);
    } else {
      best = first_argmax(power);
    }

    out.indices.push_back(chosen);
    out.trace.push_back(static_cast<double>(power[best]));
    basis.push_back(std::move(u));
  }

  out.columns.reserve(basis.size());
  for (const auto& col : basis) {
    if constexpr (std::is_same_v<T, double>) {
      out.columns.push_back(col);
    } else {
      std::vector<double> converted(m);
      for (std::size_t i = 0; i < m; ++i) converted[i] = static_cast<double>(col[i]);
      out.columns.push_back(std::move(converted));
    }
  }
  return out;
}

}  // namespace

DesignState::DesignState(KernelSpec spec) : spec_(std::move(spec)), points_(spec_.dim()) {}

void DesignState::forward_solve(std::span<double> y) const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = row(i);
    const double pivot = r[i];
    if (!(pivot >= kPivotTol)) {
      throw Error(ErrorKind::NumericalBreakdown, "triangular solve hit a pivot below tolerance");
    }
    y[i] = (y[i] - simd::dot(r.first(i), y.first(i))) / pivot;
  }
}

void DesignState::backward_solve(std::span<double> y) const {
  for (std::size_t i = size(); i-- > 0;) {
    const auto r = row(i);
    y[i] /= r[i];
    simd::axpy(-y[i], r.first(i), y.first(i));
  }
}

void DesignState::add_point(std::span<const double> t) {
  const double ktt = eval_kernel(spec_, t, t);
  if (points_.find(t) != points_.size()) {
    throw Error(ErrorKind::DuplicatePoint, "design point already selected");
  }
  const std::size_t n = size();
  std::vector<double> y(n + 1);
  for (std::size_t i = 0; i < n; ++i) y[i] = eval_kernel(spec_, t, points_[i]);
  forward_solve(std::span<double>(y).first(n));
  const double residual = ktt - simd::dot(std::span<const double>(y).first(n), std::span<const double>(y).first(n));
  const double diag = residual > 0.0 ? std::sqrt(residual) : 0.0;
  if (diag < kPivotTol) {
    throw Error(ErrorKind::NumericalBreakdown,
                "new Cholesky diagonal " + std::to_string(diag) + " below tolerance (power function vanishes)");
  }
  y[n] = diag;
  points_.push_back(t);
  factor_.insert(factor_.end(), y.begin(), y.end());
}

DesignState DesignState::with_point(std::span<const double> t) const {
  DesignState next(*this);
  next.add_point(t);
  return next;
}

double DesignState::posterior_variance(std::span<const double> t) const {
  const double ktt = eval_kernel(spec_, t, t);
  const std::size_t n = size();
  if (n == 0) return ktt;
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = eval_kernel(spec_, t, points_[i]);
  forward_solve(y);
  const double v = ktt - simd::dot(y, y);
  return std::clamp(v, 0.0, ktt);
}

std::vector<double> DesignState::interpolation_weights(std::span<const double> obs) const {
  if (obs.size() != size()) {
    throw Error(ErrorKind::DimensionMismatch, "observation count " + std::to_string(obs.size()) +
                                                  " does not match design size " + std::to_string(size()));
  }
  std::vector<double> w(obs.begin(), obs.end());
  forward_solve(w);
  backward_solve(w);
  return w;
}

double DesignState::posterior_mean(std::span<const double> obs, std::span<const double> t) const {
  const std::vector<double> w = interpolation_weights(obs);
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * eval_kernel(spec_, t, points_[i]);
  return acc;
}

Eigen::MatrixXd DesignState::cholesky() const {
  const auto n = static_cast<Eigen::Index>(size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = row(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j <= i; ++j) l(i, j) = r[static_cast<std::size_t>(j)];
  }
  return l;
}

double exhaustion_tolerance(Precision precision) noexcept { return precision == Precision::Double ? 1e-14 : 1e-90; }

NewtonBasis newton_basis(const KernelSpec& spec, const PointSet& candidates, std::size_t max_terms,
                         Precision precision, double stop_tol) {
  if (precision == Precision::Double) return run_newton<double>(spec, candidates, max_terms, stop_tol, precision);
  return run_newton<HighFloat>(spec, candidates, max_terms, stop_tol, precision);
}

GreedySelection pgreedy_select(const KernelSpec& spec, const PointSet& candidates, std::size_t N,
                               Precision precision) {
  if (N == 0) throw Error(ErrorKind::InvalidParameter, "P-greedy needs N >= 1");
  if (candidates.size() < N) {
    throw Error(ErrorKind::InvalidParameter, "fewer candidates than requested selections");
  }
  NewtonBasis basis = newton_basis(spec, candidates, N, precision, exhaustion_tolerance(precision));
  if (basis.indices.size() < N) {
    char tol[32];
    std::snprintf(tol, sizeof tol, "%g", exhaustion_tolerance(precision));
    throw Error(ErrorKind::ExhaustedCandidates,
                "power function below " + std::string(tol) + " everywhere after " +
                    std::to_string(basis.indices.size()) + " selections");
  }
  GreedySelection out{PointSet(candidates.dim()), std::move(basis.indices), {std::move(basis.trace), candidates.size()}};
  for (std::size_t idx : out.indices) out.points.push_back(candidates[idx]);
  return out;
}

FiniteRankCov::FiniteRankCov(std::vector<double> eigenvalues, std::vector<std::size_t> dims,
                             Eigen::MatrixXd eigenvectors, std::vector<double> weights)
    : eigenvalues_(std::move(eigenvalues)),
      dims_(std::move(dims)),
      vectors_(std::move(eigenvectors)),
      weights_(std::move(weights)) {
  if (eigenvalues_.empty()) throw Error(ErrorKind::InvalidParameter, "finite-rank covariance needs eigenvalues");
  if (dims_.size() != eigenvalues_.size()) throw Error(ErrorKind::DimensionMismatch, "one dimension per eigenvalue");
  std::size_t columns = 0;
  for (std::size_t j = 0; j < eigenvalues_.size(); ++j) {
    if (!(eigenvalues_[j] > 0.0)) throw Error(ErrorKind::InvalidParameter, "eigenvalues must be positive");
    if (j > 0 && eigenvalues_[j] > eigenvalues_[j - 1]) {
      throw Error(ErrorKind::InvalidParameter, "eigenvalues must be nonincreasing");
    }
    if (dims_[j] == 0) throw Error(ErrorKind::InvalidParameter, "eigenspace dimensions must be positive");
    columns += dims_[j];
  }
  if (static_cast<std::size_t>(vectors_.cols()) != columns ||
      static_cast<std::size_t>(vectors_.rows()) != weights_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "eigenvector matrix does not match dimensions or grid");
  }
  for (double w : weights_) {
    if (!(w > 0.0)) throw Error(ErrorKind::InvalidParameter, "quadrature weights must be positive");
  }
  if (orthonormality_error() > 1e-8) {
    throw Error(ErrorKind::InvalidParameter, "eigenvectors are not orthonormal in the weighted inner product");
  }
}

FiniteRankCov FiniteRankCov::random(std::vector<double> eigenvalues, std::vector<std::size_t> dims,
                                    std::size_t grid_points, std::uint64_t seed) {
  std::size_t columns = 0;
  for (std::size_t d : dims) columns += d;
  if (grid_points < columns) throw Error(ErrorKind::InvalidParameter, "grid smaller than the covariance rank");
  RngStream rng(seed, 0);
  const auto m = static_cast<Eigen::Index>(grid_points);
  const auto k = static_cast<Eigen::Index>(columns);
  Eigen::MatrixXd gauss(m, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) gauss(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
  const double w = 1.0 / static_cast<double>(grid_points);
  q /= std::sqrt(w);
  return FiniteRankCov(std::move(eigenvalues), std::move(dims), std::move(q), std::vector<double>(grid_points, w));
}

Eigen::MatrixXd FiniteRankCov::kernel_matrix(std::size_t first, std::size_t last) const {
  last = std::min(last, rank());
  const auto m = vectors_.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m, m);
  std::size_t col = 0;
  for (std::size_t j = 0; j < last; ++j) {
    if (j >= first) {
      const auto block = vectors_.middleCols(static_cast<Eigen::Index>(col), static_cast<Eigen::Index>(dims_[j]));
      out.noalias() += eigenvalues_[j] * block * block.transpose();
    }
    col += dims_[j];
  }
  return out;
}

double FiniteRankCov::orthonormality_error() const {
  const Eigen::Map<const Eigen::VectorXd> w(weights_.data(), static_cast<Eigen::Index>(weights_.size()));
  const Eigen::MatrixXd gram = vectors_.transpose() * w.asDiagonal() * vectors_;
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

ConditionGap eigen_condition_gap(const FiniteRankCov& cov, std::size_t n) {
  if (n >= cov.rank()) return {0.0, true};
  return {cov.eigenvalues()[n], false};
}

double truncation_operator_norm(const FiniteRankCov& cov, std::size_t n) {
  const Eigen::MatrixXd full = cov.kernel_matrix(0, cov.rank());
  const Eigen::MatrixXd kept = cov.kernel_matrix(0, n);
  Eigen::VectorXd sqrt_w(static_cast<Eigen::Index>(cov.weights().size()));
  for (Eigen::Index i = 0; i < sqrt_w.size(); ++i) sqrt_w(i) = std::sqrt(cov.weights()[static_cast<std::size_t>(i)]);
  const Eigen::MatrixXd op = sqrt_w.asDiagonal() * (full - kept) * sqrt_w.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error(ErrorKind::NumericalBreakdown, "symmetric eigensolve failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace gpconc
