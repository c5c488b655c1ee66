#include "gpconc/spheres.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "gpconc/errors.hpp"

namespace gpconc {

namespace {

constexpr double kTailFraction = 1e-8;

std::size_t binomial(std::size_t n, std::size_t k) {
  k = std::min(k, n - k);
  std::size_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<double> cumulative_head(const ProductSphereSpec& spec, long J) {
  std::vector<double> head(static_cast<std::size_t>(J) + 1);
  double acc = 0.0;
  for (long k = 0; k <= J; ++k) {
    acc += spec.coefficient(k) * static_cast<double>(block_size(k, spec.d1, spec.d2));
    head[static_cast<std::size_t>(k)] = acc;
  }
  return head;
}

// Orthonormal real harmonics of S^1 under arc length: one per degree 0, cos/sin above.
double circle_harmonic(long degree, int which, double theta) {
  if (degree == 0) return 1.0 / std::sqrt(2.0 * std::numbers::pi);
  const double scale = 1.0 / std::sqrt(std::numbers::pi);
  return which == 0 ? scale * std::cos(static_cast<double>(degree) * theta)
                    : scale * std::sin(static_cast<double>(degree) * theta);
}

}  // namespace

std::size_t dim_Hj(long j, long d) {
  if (j < 0 || d < 1) throw Error(ErrorKind::InvalidParameter, "harmonic degree and sphere dimension must be >= 0 and >= 1");
  if (j == 0) return 1;
  if (d == 1) return 2;
  const auto uj = static_cast<std::size_t>(j);
  const auto ud = static_cast<std::size_t>(d);
  return (2 * uj + ud - 1) * binomial(uj + ud - 2, ud - 2) / (ud - 1);
}

std::size_t block_size(long n, long d1, long d2) {
  if (n < 0) throw Error(ErrorKind::InvalidParameter, "total degree must be nonnegative");
  if (d1 == 1 && d2 == 1) return n == 0 ? 1 : 4 * static_cast<std::size_t>(n);
  std::size_t total = 0;
  for (long l = 0; l <= n; ++l) total += dim_Hj(n - l, d1) * dim_Hj(l, d2);
  return total;
}

double sphere_dim_constant(long d) {
  if (d == 1 || d == 2) return 2.0;
  throw Error(ErrorKind::InvalidParameter, "only sphere dimensions 1 and 2 are supported");
}

double ProductSphereSpec::coefficient(long k) const {
  return C * std::pow(1.0 + static_cast<double>(k), -2.0 * alpha - static_cast<double>(d1 + d2));
}

double ProductSphereSpec::tail_mass(long J) const {
  const double c12 = sphere_dim_constant(d1) * sphere_dim_constant(d2);
  return C * c12 * std::pow(1.0 + static_cast<double>(J), -2.0 * alpha) / (2.0 * alpha);
}

double ProductSphereSpec::head_mass(long J) const { return cumulative_head(*this, J).back(); }

long ProductSphereSpec::minimal_jmax() const {
  validate();
  const double c12 = sphere_dim_constant(d1) * sphere_dim_constant(d2);
  // head mass is at least B_0 = C, which gives an upper limit for the search
  const double upper = std::pow(c12 / (2.0 * alpha * kTailFraction), 1.0 / (2.0 * alpha));
  const long limit = static_cast<long>(std::ceil(upper));
  const std::vector<double> head = cumulative_head(*this, limit);
  for (long J = 0; J <= limit; ++J) {
    const double tail = tail_mass(J);
    if (tail <= kTailFraction * (head[static_cast<std::size_t>(J)] + tail)) return J;
  }
  return limit;
}

void ProductSphereSpec::validate() const {
  if (!((d1 == 1 || d1 == 2) && (d2 == 1 || d2 == 2))) {
    throw Error(ErrorKind::InvalidParameter, "sphere dimensions must be 1 or 2");
  }
  if (!(C > 0.0)) throw Error(ErrorKind::InvalidParameter, "coefficient constant C must be positive");
  if (!(alpha > 0.0)) throw Error(ErrorKind::InvalidParameter, "alpha must be positive");
  if (jmax < 0 || explicit_degree < 0) throw Error(ErrorKind::InvalidParameter, "degrees must be nonnegative");
}

SphericalField build_field(const ProductSphereSpec& spec, RngStream& rng) {
  spec.validate();
  SphericalField field;
  field.spec = spec;
  field.seed = rng.seed();
  field.stream = rng.stream();
  field.jmax = spec.jmax > 0 ? spec.jmax : spec.minimal_jmax();
  const double tail = spec.tail_mass(field.jmax);
  if (tail > kTailFraction * (spec.head_mass(field.jmax) + tail)) {
    throw Error(ErrorKind::JmaxTooSmall, "truncation degree " + std::to_string(field.jmax) +
                                             " leaves more than 1e-8 of the spectral mass");
  }
  const long explicit_top = std::min(spec.explicit_degree, field.jmax);
  field.energies.assign(static_cast<std::size_t>(field.jmax) + 1, 0.0);
  field.offsets.push_back(0);
  for (long k = 0; k <= explicit_top; ++k) {
    const std::size_t count = block_size(k, spec.d1, spec.d2);
    double energy = 0.0;
    for (std::size_t m = 0; m < count; ++m) {
      const double r = rng.normal();
      field.coefficients.push_back(r);
      energy += r * r;
    }
    field.energies[static_cast<std::size_t>(k)] = energy;
    field.offsets.push_back(field.coefficients.size());
  }
  for (long k = explicit_top + 1; k <= field.jmax; ++k) {
    field.energies[static_cast<std::size_t>(k)] =
        rng.chi_square(static_cast<double>(block_size(k, spec.d1, spec.d2)));
  }
  return field;
}

std::vector<double> l2_truncation_errors(const SphericalField& field, const std::vector<long>& schedule) {
  std::vector<double> out(schedule.size(), 0.0);
  for (long n : schedule) {
    if (n < -1) throw Error(ErrorKind::InvalidParameter, "truncation degree must be >= -1");
  }
  std::vector<std::size_t> order(schedule.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return schedule[a] > schedule[b]; });

  double acc = 0.0;
  long k = field.jmax;
  for (std::size_t idx : order) {
    const long n = schedule[idx];
    for (; k > n; --k) acc += field.spec.coefficient(k) * field.energies[static_cast<std::size_t>(k)];
    out[idx] = std::sqrt(acc);
  }
  return out;
}

double l2_truncation_error(const SphericalField& field, long n) { return l2_truncation_errors(field, {n}).front(); }

BoundResult sphere_bound(const ProductSphereSpec& spec, std::size_t n, double tau) {
  spec.validate();
  const double c1 = sphere_dim_constant(spec.d1);
  const double c2 = sphere_dim_constant(spec.d2);
  const double dims = static_cast<double>(spec.d1 + spec.d2);
  BoundResult out = bound_polynomial_multi(spec.C, c1 * c2, 2.0 * spec.alpha + dims, dims - 1.0, n, tau);
  out.source = BoundSource::Sphere;
  const double printed = std::sqrt(20.0 * std::pow(2.0, dims - 1.0) * spec.C * c1 * c2 * std::max(1.0, tau)) /
                         (2.0 * spec.alpha) * std::pow(static_cast<double>(n), -spec.alpha);
  out.diagnostics = {{"printed_radius", printed}, {"c_d1", c1}, {"c_d2", c2}};
  return out;
}

std::vector<double> torus_truncation_norms(const ProductSphereSpec& spec, long cov_degree, std::size_t points) {
  spec.validate();
  if (spec.d1 != 1 || spec.d2 != 1) throw Error(ErrorKind::InvalidParameter, "torus check needs d1 = d2 = 1");
  if (cov_degree < 1 || 2 * static_cast<std::size_t>(cov_degree) >= points) {
    throw Error(ErrorKind::InvalidParameter, "covariance degree must be in [1, points/2)");
  }
  struct Mode {
    long k1, k2;
    int w1, w2;
  };
  std::vector<Mode> modes;
  std::vector<std::size_t> degree_start;
  for (long total = 0; total <= cov_degree; ++total) {
    degree_start.push_back(modes.size());
    for (long k1 = 0; k1 <= total; ++k1) {
      const long k2 = total - k1;
      for (int w1 = 0; w1 < (k1 == 0 ? 1 : 2); ++w1) {
        for (int w2 = 0; w2 < (k2 == 0 ? 1 : 2); ++w2) modes.push_back({k1, k2, w1, w2});
      }
    }
  }
  degree_start.push_back(modes.size());

  const auto P = static_cast<Eigen::Index>(points);
  const double h = 2.0 * std::numbers::pi / static_cast<double>(points);
  const auto cols = static_cast<Eigen::Index>(modes.size());
  Eigen::MatrixXd phi(P * P, cols);
  for (Eigen::Index col = 0; col < cols; ++col) {
    const Mode& md = modes[static_cast<std::size_t>(col)];
    for (Eigen::Index a = 0; a < P; ++a) {
      const double f1 = circle_harmonic(md.k1, md.w1, h * static_cast<double>(a));
      for (Eigen::Index b = 0; b < P; ++b) {
        phi(a * P + b, col) = f1 * circle_harmonic(md.k2, md.w2, h * static_cast<double>(b));
      }
    }
  }
  const Eigen::MatrixXd gram = (h * h) * (phi.transpose() * phi);

  std::vector<double> norms;
  for (long n = 0; n < cov_degree; ++n) {
    const auto first = static_cast<Eigen::Index>(degree_start[static_cast<std::size_t>(n) + 1]);
    const Eigen::Index count = cols - first;
    Eigen::VectorXd root_b(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      const Mode& md = modes[static_cast<std::size_t>(first + i)];
      root_b(i) = std::sqrt(spec.coefficient(md.k1 + md.k2));
    }
    const Eigen::MatrixXd op = root_b.asDiagonal() * gram.block(first, first, count, count) * root_b.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(op, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::NumericalBreakdown, "torus eigensolve failed");
    norms.push_back(solver.eigenvalues().cwiseAbs().maxCoeff());
  }
  return norms;
}

}  // namespace gpconc
