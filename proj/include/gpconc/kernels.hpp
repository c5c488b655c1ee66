#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gpconc {

/// Ordered, duplicate-free points in [0,1]^d stored row-major.
class PointSet {
 public:
  static constexpr double kSeparationTol = 1e-10;

  explicit PointSet(std::size_t dim);
  /// Validates range and pairwise separation of every point.
  PointSet(std::size_t dim, std::vector<double> coords);

  /// Tensor grid with points_per_axis nodes per axis, last axis fastest.
  static PointSet uniform_grid(std::size_t dim, std::size_t points_per_axis);

  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  [[nodiscard]] bool empty() const noexcept { return coords_.empty(); }
  [[nodiscard]] std::span<const double> operator[](std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  [[nodiscard]] const std::vector<double>& coords() const noexcept { return coords_; }

  /// Throws Domain if outside the unit cube, DuplicatePoint if within
  /// kSeparationTol of an existing point.
  void push_back(std::span<const double> point);

  /// Index of a point within kSeparationTol of p, or size() when absent.
  [[nodiscard]] std::size_t find(std::span<const double> p, double tol = kSeparationTol) const noexcept;

 private:
  struct Trusted {};
  PointSet(std::size_t dim, std::vector<double> coords, Trusted) : dim_(dim), coords_(std::move(coords)) {}

  std::size_t dim_;
  std::vector<double> coords_;
};

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

enum class KernelType { Matern, Gaussian, Tabulated };

class KernelSpec {
 public:
  /// Matérn kernel of Sobolev smoothness s on [0,1]^d, order nu = s - d/2.
  static KernelSpec matern(double smoothness, std::size_t dim);
  /// exp(-|t-s|^2)
  static KernelSpec gaussian(std::size_t dim);
  /// Kernel given by its values on a finite node set; evaluation points must
  /// coincide with nodes.
  static KernelSpec tabulated(PointSet nodes, Eigen::MatrixXd values);

  [[nodiscard]] KernelType type() const noexcept { return type_; }
  [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
  [[nodiscard]] double smoothness() const noexcept { return smoothness_; }
  [[nodiscard]] double nu() const noexcept { return smoothness_ - 0.5 * static_cast<double>(dim_); }

  [[nodiscard]] const PointSet& nodes() const;
  [[nodiscard]] const Eigen::MatrixXd& table() const;

 private:
  struct Table {
    PointSet nodes;
    Eigen::MatrixXd values;
  };

  KernelSpec(KernelType type, std::size_t dim, double smoothness) : type_(type), dim_(dim), smoothness_(smoothness) {}

  KernelType type_;
  std::size_t dim_;
  double smoothness_ = 0.0;
  std::shared_ptr<const Table> table_;
};

/// Modified Bessel function of the second kind K_nu(x) for nu >= 0, x > 0.
double bessel_k(double nu, double x);

/// Normalised Matérn correlation 2^{1-nu}/Gamma(nu) r^nu K_nu(r), exactly 1 at r = 0.
double matern_correlation(double nu, double r);

/// Closed form of the Matérn correlation for nu = p + 1/2, in any floating type.
template <class T>
T matern_half_integer_as(unsigned p, const T& r) {
  using std::exp;
  // e^{-r} p!/(2p)! sum_i (p+i)!/(i!(p-i)!) (2r)^{p-i}, Horner in 2r
  const T x = 2 * r;
  T coeff = 1;
  T poly = 1;
  for (unsigned i = 1; i <= p; ++i) {
    coeff = coeff * T(p + i) * T(p - i + 1) / T(i);
    poly = poly * x + coeff;
  }
  T scale = 1;
  for (unsigned i = p + 1; i <= 2 * p; ++i) scale /= T(i);
  return exp(-r) * poly * scale;
}

inline double matern_half_integer(unsigned p, double r) { return matern_half_integer_as<double>(p, r); }

double eval_kernel(const KernelSpec& spec, std::span<const double> t, std::span<const double> s);

/// Same kernel evaluated in an arbitrary floating type. Gaussian and
/// half-integer Matérn kernels are evaluated natively in T; other variants
/// are evaluated in double and converted.
template <class T>
T eval_kernel_as(const KernelSpec& spec, std::span<const double> t, std::span<const double> s) {
  using std::exp;
  if (spec.type() == KernelType::Gaussian) {
    T r2 = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const T diff = T(t[i]) - T(s[i]);
      r2 += diff * diff;
    }
    return exp(-r2);
  }
  if (spec.type() == KernelType::Matern) {
    const double twice_nu = 2.0 * spec.nu();
    if (twice_nu == std::floor(twice_nu) && static_cast<long>(twice_nu) % 2 == 1 && twice_nu < 40.0) {
      using std::sqrt;
      T r2 = 0;
      for (std::size_t i = 0; i < t.size(); ++i) {
        const T diff = T(t[i]) - T(s[i]);
        r2 += diff * diff;
      }
      return matern_half_integer_as<T>(static_cast<unsigned>(twice_nu) / 2, sqrt(r2));
    }
  }
  return T(eval_kernel(spec, t, s));
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const PointSet& pts);

/// k(t, p_i) for every point of pts.
void kernel_column(const KernelSpec& spec, const PointSet& pts, std::span<const double> t, std::span<double> out);

}  // namespace gpconc
