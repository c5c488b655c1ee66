#include "gpconc/concentration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gpconc/errors.hpp"
#include "gpconc/parallel.hpp"
#include "gpconc/simd.hpp"

namespace gpconc {

namespace {

constexpr std::size_t kNormPrefix = 10000;
constexpr std::size_t kMaxTruncation = 100'000'000;

// sum_{j>=1} j^{-p} bounded above by an explicit prefix plus the integral of the rest
double zeta_upper(double p) {
  double s = 0.0;
  for (std::size_t j = kNormPrefix; j >= 1; --j) s += std::pow(static_cast<double>(j), -p);
  return s + std::pow(static_cast<double>(kNormPrefix), 1.0 - p) / (p - 1.0);
}

std::vector<double> prefix(const WeightSeq& b, std::size_t J) {
  std::vector<double> out(J);
  for (std::size_t j = 0; j < J; ++j) out[j] = b(j + 1);
  return out;
}

double draw_Z(std::span<const double> weights, RngStream& rng, std::vector<double>& scratch) {
  scratch.resize(weights.size());
  rng.fill_normal(scratch);
  return simd::chisq_sum(weights, scratch);
}

}  // namespace

WeightSeq WeightSeq::geometric(double ratio, double scale) {
  if (!(ratio >= 0.0 && ratio < 1.0)) throw Error(ErrorKind::NonsummableTail, "geometric ratio must lie in [0, 1)");
  if (!(scale >= 0.0)) throw Error(ErrorKind::InvalidParameter, "weights must be nonnegative");
  WeightSeq w(Family::Geometric, ratio, scale);
  w.compute_norms();
  return w;
}

WeightSeq WeightSeq::polynomial(double power, double scale) {
  if (!(power > 1.0)) throw Error(ErrorKind::NonsummableTail, "polynomial weights need power > 1");
  if (!(scale >= 0.0)) throw Error(ErrorKind::InvalidParameter, "weights must be nonnegative");
  WeightSeq w(Family::Polynomial, power, scale);
  w.compute_norms();
  return w;
}

WeightSeq WeightSeq::finite(std::vector<double> values) {
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidParameter, "weights must be finite and nonnegative");
  }
  WeightSeq w(Family::Finite, 0.0, 1.0);
  w.values_ = std::move(values);
  w.compute_norms();
  return w;
}

WeightSeq WeightSeq::finite_random(std::size_t count, std::uint64_t seed) {
  RngStream rng(seed, 0);
  std::vector<double> values(count);
  for (double& v : values) v = rng.uniform();
  return finite(std::move(values));
}

void WeightSeq::compute_norms() {
  const double r = param_a_;
  const double s = param_b_;
  switch (family_) {
    case Family::Geometric:
      l1_ = s * r / (1.0 - r);
      l2_ = s * r / std::sqrt(1.0 - r * r);
      linf_ = s * r;
      break;
    case Family::Polynomial:
      l1_ = s * zeta_upper(r);
      l2_ = s * std::sqrt(zeta_upper(2.0 * r));
      linf_ = s;
      break;
    case Family::Finite: {
      double sq = 0.0;
      l1_ = 0.0;
      linf_ = 0.0;
      for (double v : values_) {
        l1_ += v;
        sq += v * v;
        linf_ = std::max(linf_, v);
      }
      l2_ = std::sqrt(sq);
      break;
    }
  }
}

std::string WeightSeq::label() const {
  char buf[96];
  switch (family_) {
    case Family::Geometric:
      std::snprintf(buf, sizeof buf, "geometric(ratio=%g;scale=%g)", param_a_, param_b_);
      return buf;
    case Family::Polynomial:
      std::snprintf(buf, sizeof buf, "polynomial(power=%g;scale=%g)", param_a_, param_b_);
      return buf;
    case Family::Finite:
      std::snprintf(buf, sizeof buf, "finite(count=%zu)", values_.size());
      return buf;
  }
  return "unknown";
}

double WeightSeq::operator()(std::size_t j) const noexcept {
  if (j == 0) return 0.0;
  switch (family_) {
    case Family::Geometric:
      return param_b_ * std::pow(param_a_, static_cast<double>(j));
    case Family::Polynomial:
      return param_b_ * std::pow(static_cast<double>(j), -param_a_);
    case Family::Finite:
      return j <= values_.size() ? values_[j - 1] : 0.0;
  }
  return 0.0;
}

double WeightSeq::tail_square_sum(std::size_t J) const {
  const double s2 = param_b_ * param_b_;
  switch (family_) {
    case Family::Geometric: {
      const double r2 = param_a_ * param_a_;
      return s2 * std::pow(r2, static_cast<double>(J + 1)) / (1.0 - r2);
    }
    case Family::Polynomial:
      if (J == 0) return l2_ * l2_;
      return s2 * std::pow(static_cast<double>(J), 1.0 - 2.0 * param_a_) / (2.0 * param_a_ - 1.0);
    case Family::Finite: {
      double acc = 0.0;
      for (std::size_t j = J; j < values_.size(); ++j) acc += values_[j] * values_[j];
      return acc;
    }
  }
  return 0.0;
}

std::size_t WeightSeq::truncation_length(double trunc_tol) const {
  if (!(trunc_tol > 0.0)) throw Error(ErrorKind::InvalidParameter, "truncation tolerance must be positive");
  if (family_ == Family::Finite) {
    std::size_t J = values_.size();
    while (J > 0 && std::sqrt(2.0 * tail_square_sum(J - 1)) < trunc_tol) --J;
    return J;
  }
  // exponential search followed by bisection on the monotone tail bound
  const auto ok = [&](std::size_t J) { return std::sqrt(2.0 * tail_square_sum(J)) < trunc_tol; };
  if (ok(0)) return 0;
  std::size_t hi = 1;
  while (!ok(hi)) {
    if (hi > kMaxTruncation) {
      throw Error(ErrorKind::TruncationUnreachable, "weight tail never meets the truncation tolerance");
    }
    hi *= 2;
  }
  std::size_t lo = hi / 2;
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

double chisq_tail_bound(const WeightSeq& b, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidParameter, "tau must be positive");
  return 2.0 * b.l2() * std::sqrt(tau) + 2.0 * b.linf() * tau;
}

double massart_tail_radius(double v, double c, double tau) {
  if (!(v > 0.0) || !(c > 0.0) || !(tau > 0.0)) {
    throw Error(ErrorKind::InvalidParameter, "Massart radius needs positive v, c and tau");
  }
  return c * tau + std::sqrt(2.0 * v * tau);
}

double sample_Z(const WeightSeq& b, RngStream& rng, double trunc_tol) {
  const std::vector<double> weights = prefix(b, b.truncation_length(trunc_tol));
  std::vector<double> scratch;
  return draw_Z(weights, rng, scratch);
}

ViolationRate mc_violation_rate(const WeightSeq& b, double tau, std::size_t M, std::uint64_t seed, double trunc_tol,
                                unsigned workers) {
  if (M == 0) throw Error(ErrorKind::InvalidParameter, "replicate count must be positive");
  ViolationRate out;
  out.bound = chisq_tail_bound(b, tau);
  out.replicates = M;
  const std::vector<double> weights = prefix(b, b.truncation_length(trunc_tol));
  const bool strict = out.bound == 0.0;
  std::vector<unsigned char> hit(M, 0);
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (M + kBlock - 1) / kBlock;
  parallel_for(blocks, workers, [&](std::size_t blk) {
    std::vector<double> scratch;
    const std::size_t end = std::min(M, (blk + 1) * kBlock);
    for (std::size_t i = blk * kBlock; i < end; ++i) {
      RngStream rng(seed, i);
      const double z = draw_Z(weights, rng, scratch);
      hit[i] = strict ? (z > out.bound) : (z >= out.bound);
    }
  });
  for (unsigned char h : hit) out.violations += h;
  out.rate = static_cast<double>(out.violations) / static_cast<double>(M);
  out.ci_halfwidth = 3.0 * std::sqrt(out.rate * (1.0 - out.rate) / static_cast<double>(M));
  return out;
}

double violation_threshold(double tau, std::size_t M) {
  const double p = std::exp(-tau);
  return p + 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(M));
}

}  // namespace gpconc
