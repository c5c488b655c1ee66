#include "gpconc/kernels.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "gpconc/errors.hpp"

namespace gpconc {

namespace {

void check_unit_cube(std::span<const double> p) {
  for (double x : p) {
    if (!(x >= 0.0 && x <= 1.0)) {
      throw Error(ErrorKind::Domain, "point coordinate " + std::to_string(x) + " outside [0,1]");
    }
  }
}

void check_dims(std::size_t expected, std::span<const double> p) {
  if (p.size() != expected) {
    throw Error(ErrorKind::DimensionMismatch,
                "point has " + std::to_string(p.size()) + " coordinates, expected " + std::to_string(expected));
  }
}

// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu), gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl, double& gammi) {
  gampl = 1.0 / std::tgamma(1.0 + mu);
  gammi = 1.0 / std::tgamma(1.0 - mu);
  if (std::fabs(mu) < 0.01) {
    // Taylor coefficients of 1/Gamma(1+z)
    constexpr double a1 = 0.5772156649015329;
    constexpr double a2 = -0.6558780715202538;
    constexpr double a3 = -0.0420026350340952;
    constexpr double a4 = 0.1665386113822915;
    constexpr double a5 = -0.0421977345555443;
    constexpr double a6 = -0.0096219715278770;
    const double m2 = mu * mu;
    gam1 = -(a1 + m2 * (a3 + m2 * a5));
    gam2 = 1.0 + m2 * (a2 + m2 * (a4 + m2 * a6));
  } else {
    gam1 = (gammi - gampl) / (2.0 * mu);
    gam2 = 0.5 * (gammi + gampl);
  }
}

}  // namespace

PointSet::PointSet(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorKind::InvalidParameter, "point dimension must be positive");
}

PointSet::PointSet(std::size_t dim, std::vector<double> coords) : PointSet(dim) {
  if (coords.size() % dim != 0) {
    throw Error(ErrorKind::DimensionMismatch, "coordinate count is not a multiple of the dimension");
  }
  coords_.reserve(coords.size());
  for (std::size_t i = 0; i < coords.size(); i += dim) {
    push_back(std::span<const double>(coords.data() + i, dim));
  }
}

PointSet PointSet::uniform_grid(std::size_t dim, std::size_t points_per_axis) {
  if (dim == 0) throw Error(ErrorKind::InvalidParameter, "point dimension must be positive");
  if (points_per_axis < 2) throw Error(ErrorKind::InvalidParameter, "a uniform grid needs at least 2 points per axis");
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) total *= points_per_axis;
  std::vector<double> coords(total * dim);
  const double h = 1.0 / static_cast<double>(points_per_axis - 1);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rest = i;
    for (std::size_t k = dim; k-- > 0;) {
      coords[i * dim + k] = static_cast<double>(rest % points_per_axis) * h;
      rest /= points_per_axis;
    }
  }
  return PointSet(dim, std::move(coords), Trusted{});
}

void PointSet::push_back(std::span<const double> point) {
  check_dims(dim_, point);
  check_unit_cube(point);
  if (find(point) != size()) {
    throw Error(ErrorKind::DuplicatePoint, "point closer than the separation tolerance to an existing point");
  }
  coords_.insert(coords_.end(), point.begin(), point.end());
}

std::size_t PointSet::find(std::span<const double> p, double tol) const noexcept {
  const double tol2 = tol * tol;
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    if (squared_distance((*this)[i], p) < tol2) return i;
  }
  return n;
}

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff;
  }
  return acc;
}

KernelSpec KernelSpec::matern(double smoothness, std::size_t dim) {
  if (dim == 0) throw Error(ErrorKind::InvalidParameter, "kernel dimension must be positive");
  if (!(smoothness > static_cast<double>(dim))) {
    throw Error(ErrorKind::InvalidParameter,
                "Matern smoothness s = " + std::to_string(smoothness) + " must exceed the dimension d = " +
                    std::to_string(dim));
  }
  return KernelSpec(KernelType::Matern, dim, smoothness);
}

KernelSpec KernelSpec::gaussian(std::size_t dim) {
  if (dim == 0) throw Error(ErrorKind::InvalidParameter, "kernel dimension must be positive");
  return KernelSpec(KernelType::Gaussian, dim, 0.0);
}

KernelSpec KernelSpec::tabulated(PointSet nodes, Eigen::MatrixXd values) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  if (n == 0 || values.rows() != n || values.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "tabulated kernel needs an n x n table for n nodes");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(values(i, i) > 0.0)) throw Error(ErrorKind::InvalidParameter, "tabulated kernel diagonal must be positive");
    for (Eigen::Index j = 0; j < i; ++j) {
      if (values(i, j) != values(j, i)) throw Error(ErrorKind::InvalidParameter, "tabulated kernel must be symmetric");
    }
  }
  KernelSpec spec(KernelType::Tabulated, nodes.dim(), 0.0);
  spec.table_ = std::make_shared<const Table>(Table{std::move(nodes), std::move(values)});
  return spec;
}

const PointSet& KernelSpec::nodes() const {
  if (!table_) throw Error(ErrorKind::InvalidParameter, "kernel is not tabulated");
  return table_->nodes;
}

const Eigen::MatrixXd& KernelSpec::table() const {
  if (!table_) throw Error(ErrorKind::InvalidParameter, "kernel is not tabulated");
  return table_->values;
}

double bessel_k(double nu, double x) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw Error(ErrorKind::InvalidParameter, "Bessel order must be >= 0");
  if (!(x > 0.0)) throw Error(ErrorKind::Domain, "Bessel K argument must be positive");
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int max_iter = 100000;

  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;
  const double mu2 = mu * mu;
  const double xi = 1.0 / x;
  const double xi2 = 2.0 * xi;
  double k_mu = 0.0;
  double k_mu1 = 0.0;

  if (x <= 2.0) {
    const double half_x = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::fabs(pimu) < eps ? 1.0 : pimu / std::sin(pimu);
    double d = -std::log(half_x);
    double e = mu * d;
    const double fact2 = std::fabs(e) < eps ? 1.0 : std::sinh(e) / e;
    double gam1, gam2, gampl, gammi;
    temme_gammas(mu, gam1, gam2, gampl, gammi);
    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    double p = 0.5 * e / gampl;
    double q = 0.5 / (e * gammi);
    double c = 1.0;
    d = half_x * half_x;
    double sum1 = p;
    int i = 1;
    for (; i <= max_iter; ++i) {
      const double di = i;
      ff = (di * ff + p + q) / (di * di - mu2);
      c *= d / di;
      p /= di - mu;
      q /= di + mu;
      const double del = c * ff;
      sum += del;
      sum1 += c * (p - di * ff);
      if (std::fabs(del) < std::fabs(sum) * eps) break;
    }
    if (i > max_iter) throw Error(ErrorKind::NumericalBreakdown, "Bessel K series failed to converge");
    k_mu = sum;
    k_mu1 = sum1 * xi2;
  } else {
    // Steed's continued fraction
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= max_iter; ++i) {
      a -= 2.0 * (i - 1);
      c = -a * c / i;
      const double qnew = (q1 - b * q2) / a;
      q1 = q2;
      q2 = qnew;
      q += c * qnew;
      b += 2.0;
      d = 1.0 / (b + a * d);
      delh = (b * d - 1.0) * delh;
      h += delh;
      const double dels = q * delh;
      s += dels;
      if (std::fabs(dels / s) < eps) break;
    }
    if (i > max_iter) throw Error(ErrorKind::NumericalBreakdown, "Bessel K continued fraction failed to converge");
    h = a1 * h;
    k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
  }

  for (int i = 1; i <= nl; ++i) {
    const double next = (mu + i) * xi2 * k_mu1 + k_mu;
    k_mu = k_mu1;
    k_mu1 = next;
  }
  return k_mu;
}

double matern_correlation(double nu, double r) {
  if (!(nu > 0.0)) throw Error(ErrorKind::InvalidParameter, "Matern order must be positive");
  if (r < 0.0) throw Error(ErrorKind::Domain, "distance must be nonnegative");
  if (r == 0.0) return 1.0;
  const double log_value =
      (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(r) + std::log(bessel_k(nu, r));
  return std::exp(log_value);
}

double eval_kernel(const KernelSpec& spec, std::span<const double> t, std::span<const double> s) {
  check_dims(spec.dim(), t);
  check_dims(spec.dim(), s);
  check_unit_cube(t);
  check_unit_cube(s);
  switch (spec.type()) {
    case KernelType::Gaussian:
      return std::exp(-squared_distance(t, s));
    case KernelType::Matern:
      return matern_correlation(spec.nu(), std::sqrt(squared_distance(t, s)));
    case KernelType::Tabulated: {
      const PointSet& nodes = spec.nodes();
      const std::size_t i = nodes.find(t);
      const std::size_t j = nodes.find(s);
      if (i == nodes.size() || j == nodes.size()) {
        throw Error(ErrorKind::Domain, "tabulated kernel evaluated off its node set");
      }
      return spec.table()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
  }
  return 0.0;
}

Eigen::MatrixXd gram_matrix(const KernelSpec& spec, const PointSet& pts) {
  if (pts.empty()) throw Error(ErrorKind::InvalidParameter, "gram matrix of an empty point set");
  const auto n = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd g(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double v = eval_kernel(spec, pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]);
      g(i, j) = v;
      g(j, i) = v;
    }
  }
  return g;
}

void kernel_column(const KernelSpec& spec, const PointSet& pts, std::span<const double> t, std::span<double> out) {
  if (out.size() != pts.size()) throw Error(ErrorKind::DimensionMismatch, "kernel column output has the wrong length");
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = eval_kernel(spec, t, pts[i]);
}

}  // namespace gpconc
