#include <atomic>
#include <cstdlib>
#include <string_view>

#include "gpconc/errors.hpp"
#include "gpconc/simd.hpp"

namespace gpconc::simd {

namespace {

Backend initial_backend() noexcept {
  if (const char* env = std::getenv("GPCONC_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
    return Backend::Scalar;
  }
  return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() noexcept {
  static std::atomic<Backend> backend{initial_backend()};
  return backend;
}

}  // namespace

std::string_view name(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool avx2_supported() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported;
#else
  return false;
#endif
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::Avx2 && !avx2_supported()) {
    throw Error(ErrorKind::InvalidParameter, "AVX2 backend requested on a CPU without AVX2/FMA");
  }
  current().store(backend, std::memory_order_relaxed);
}

double dot(std::span<const double> x, std::span<const double> y) {
  return active_backend() == Backend::Avx2 ? avx2::dot(x, y) : scalar::dot(x, y);
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  if (active_backend() == Backend::Avx2) {
    avx2::axpy(alpha, x, y);
  } else {
    scalar::axpy(alpha, x, y);
  }
}

double abs_max(std::span<const double> x) {
  return active_backend() == Backend::Avx2 ? avx2::abs_max(x) : scalar::abs_max(x);
}

std::size_t subtract_squares(std::span<double> p, std::span<const double> u) {
  return active_backend() == Backend::Avx2 ? avx2::subtract_squares(p, u) : scalar::subtract_squares(p, u);
}

double chisq_sum(std::span<const double> b, std::span<const double> r) {
  return active_backend() == Backend::Avx2 ? avx2::chisq_sum(b, r) : scalar::chisq_sum(b, r);
}

}  // namespace gpconc::simd
