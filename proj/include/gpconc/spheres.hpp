#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gpconc/bounds.hpp"
#include "gpconc/rng.hpp"

namespace gpconc {

/// Dimension of the degree-j spherical harmonics on the d-sphere.
std::size_t dim_Hj(long j, long d);

/// Number of product harmonics of total degree n on S^{d1} x S^{d2}.
std::size_t block_size(long n, long d1, long d2);

/// Smallest c_d with D_j(d) <= c_d (j+1)^{d-1} for all j.
double sphere_dim_constant(long d);

struct ProductSphereSpec {
  long d1 = 1;
  long d2 = 1;
  double C = 1.0;
  double alpha = 1.0;
  long jmax = 0;            // 0 selects the smallest degree meeting the tail-mass rule
  long explicit_degree = 64;  // coefficients stored individually up to this total degree

  /// B_k = C (1+k)^{-2 alpha - d1 - d2}
  [[nodiscard]] double coefficient(long k) const;
  /// Upper bound on sum_{k > J} B_k block_size(k).
  [[nodiscard]] double tail_mass(long J) const;
  /// sum_{k <= J} B_k block_size(k)
  [[nodiscard]] double head_mass(long J) const;
  /// Smallest J whose tail mass is at most 1e-8 of the total.
  [[nodiscard]] long minimal_jmax() const;

  void validate() const;
};

/// Gaussian field sum_k sqrt(B_k) sum_m r_{k,m} S_{k,m} on the product of
/// spheres. Coefficients are kept individually up to explicit_degree; above
/// it only the per-degree energies sum_m r_{k,m}^2 are drawn, which is all the
/// L2 error depends on.
struct SphericalField {
  ProductSphereSpec spec;
  long jmax = 0;
  std::vector<double> coefficients;   // explicit r_{k,m}, ordered by total degree
  std::vector<std::size_t> offsets;   // start of degree k in coefficients, size explicit + 2
  std::vector<double> energies;       // sum_m r_{k,m}^2 for k = 0..jmax
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Throws JmaxTooSmall when the requested truncation leaves more than 1e-8
/// of the spectral mass outside.
SphericalField build_field(const ProductSphereSpec& spec, RngStream& rng);

/// sqrt(sum_{n < k <= jmax} B_k E_k); n = -1 keeps nothing.
double l2_truncation_error(const SphericalField& field, long n);

/// l2_truncation_error for every n of a schedule in one pass.
std::vector<double> l2_truncation_errors(const SphericalField& field, const std::vector<long>& schedule);

/// The polynomial-multi bound with C, c_{d1} c_{d2}, 2 alpha + d1 + d2 and
/// d1 + d2 - 1.
BoundResult sphere_bound(const ProductSphereSpec& spec, std::size_t n, double tau);

/// Grid check on the torus S^1 x S^1 (d1 = d2 = 1). Entry n is the operator
/// norm of the covariance of the field truncated at degree cov_degree minus
/// its degree-n truncation, discretised on a points x points angle grid with
/// equal quadrature weights, for n = 0 .. cov_degree - 1.
std::vector<double> torus_truncation_norms(const ProductSphereSpec& spec, long cov_degree, std::size_t points);

}  // namespace gpconc
