// Compiled with -mavx2 -mfma -ffp-contract=off; only reached after a runtime
// CPU check.

#include <cmath>

#include "gpconc/simd.hpp"

#if defined(__AVX2__) && defined(__FMA__)

#include <immintrin.h>

namespace gpconc::simd::avx2 {

namespace {

inline double horizontal_sum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline double horizontal_max(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d m = _mm_max_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_max_sd(m, _mm_unpackhi_pd(m, m)));
}

}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const double* a = x.data();
  const double* b = y.data();
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double acc = horizontal_sum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const double* src = x.data();
  double* dst = y.data();
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  // mul + add rather than fmadd keeps this bit-identical to the scalar path
  for (; i + 4 <= n; i += 4) {
    const __m256d prod = _mm256_mul_pd(va, _mm256_loadu_pd(src + i));
    _mm256_storeu_pd(dst + i, _mm256_add_pd(_mm256_loadu_pd(dst + i), prod));
  }
  for (; i < n; ++i) dst[i] += alpha * src[i];
}

double abs_max(std::span<const double> x) {
  const std::size_t n = x.size();
  const double* src = x.data();
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_andnot_pd(sign_mask, _mm256_loadu_pd(src + i));
    acc = _mm256_max_pd(v, acc);
  }
  double m = horizontal_max(acc);
  for (; i < n; ++i) m = std::fmax(m, std::fabs(src[i]));
  return m;
}

std::size_t subtract_squares(std::span<double> p, std::span<const double> u) {
  const std::size_t n = p.size();
  if (n == 0) return 0;
  double* dst = p.data();
  const double* src = u.data();
  const __m256d zero = _mm256_setzero_pd();
  __m256d vmax = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d uu = _mm256_loadu_pd(src + i);
    const __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(dst + i), _mm256_mul_pd(uu, uu));
    const __m256d v = _mm256_max_pd(diff, zero);
    _mm256_storeu_pd(dst + i, v);
    vmax = _mm256_max_pd(v, vmax);
  }
  double best_value = horizontal_max(vmax);
  for (; i < n; ++i) {
    const double sq = src[i] * src[i];
    double v = dst[i] - sq;
    if (!(v > 0.0)) v = 0.0;
    dst[i] = v;
    if (v > best_value) best_value = v;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (dst[k] == best_value) return k;
  }
  return 0;
}

double chisq_sum(std::span<const double> b, std::span<const double> r) {
  const std::size_t n = b.size();
  const double* w = b.data();
  const double* x = r.data();
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d centered = _mm256_fmsub_pd(xv, xv, one);
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), centered, acc);
  }
  double total = horizontal_sum(acc);
  for (; i < n; ++i) total += w[i] * (x[i] * x[i] - 1.0);
  return total;
}

}  // namespace gpconc::simd::avx2

#else  // no AVX2 in this build; dispatch never selects these

namespace gpconc::simd::avx2 {

double dot(std::span<const double> x, std::span<const double> y) { return scalar::dot(x, y); }
void axpy(double alpha, std::span<const double> x, std::span<double> y) { scalar::axpy(alpha, x, y); }
double abs_max(std::span<const double> x) { return scalar::abs_max(x); }
std::size_t subtract_squares(std::span<double> p, std::span<const double> u) { return scalar::subtract_squares(p, u); }
double chisq_sum(std::span<const double> b, std::span<const double> r) { return scalar::chisq_sum(b, r); }

}  // namespace gpconc::simd::avx2

#endif
