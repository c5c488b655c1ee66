#pragma once

// Data-parallel inner loops with a scalar reference implementation and an
// AVX2/FMA variant chosen at runtime. Elementwise kernels (axpy,
// subtract_squares, abs_max) are bit-identical across backends; reductions
// (dot, chisq_sum) differ only by summation order.

#include <cstddef>
#include <span>
#include <string_view>

namespace gpconc::simd {

enum class Backend { Scalar, Avx2 };

std::string_view name(Backend backend) noexcept;

bool avx2_supported() noexcept;

/// Backend used by the dispatching entry points below. Defaults to AVX2 when
/// the CPU supports it unless GPCONC_SIMD=scalar is set in the environment.
Backend active_backend() noexcept;

/// Throws gpconc::Error(InvalidParameter) if the backend is not supported.
void set_backend(Backend backend);

class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

double dot(std::span<const double> x, std::span<const double> y);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double abs_max(std::span<const double> x);

/// p[i] = max(p[i] - u[i]^2, 0); returns the index of the largest updated
/// entry, lowest index on ties. Returns 0 for empty input.
std::size_t subtract_squares(std::span<double> p, std::span<const double> u);

/// sum_j b[j] * (r[j]^2 - 1)
double chisq_sum(std::span<const double> b, std::span<const double> r);

namespace scalar {
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double abs_max(std::span<const double> x);
std::size_t subtract_squares(std::span<double> p, std::span<const double> u);
double chisq_sum(std::span<const double> b, std::span<const double> r);
}  // namespace scalar

namespace avx2 {
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double abs_max(std::span<const double> x);
std::size_t subtract_squares(std::span<double> p, std::span<const double> u);
double chisq_sum(std::span<const double> b, std::span<const double> r);
}  // namespace avx2

}  // namespace gpconc::simd
