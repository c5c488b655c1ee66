#include <cmath>

#include "gpconc/simd.hpp"

namespace gpconc::simd::scalar {

double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double abs_max(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::fmax(m, std::fabs(v));
  return m;
}

std::size_t subtract_squares(std::span<double> p, std::span<const double> u) {
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double sq = u[i] * u[i];
    double v = p[i] - sq;
    if (!(v > 0.0)) v = 0.0;
    p[i] = v;
    if (v > best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

double chisq_sum(std::span<const double> b, std::span<const double> r) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double sq = r[i] * r[i];
    acc += b[i] * (sq - 1.0);
  }
  return acc;
}

}  // namespace gpconc::simd::scalar
