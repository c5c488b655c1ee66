#include "gpconc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "gpconc/errors.hpp"

namespace gpconc {

namespace {

// a tail sum stops once its integral remainder is this small relative to the
// partial sum, or, after at least kTermStopMinTerms terms, once single terms
// are below kTermStop of it (the remainder is still added, so the radius stays
// an upper bound)
constexpr double kStopRelative = 1e-12;
constexpr double kTermStop = 1e-7;
constexpr std::size_t kTermStopMinTerms = 10'000;
constexpr std::size_t kMaxTerms = 10'000'000;
constexpr double kMonotoneSlack = 1e-9;

void check_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorKind::InvalidParameter, "tau must be positive");
}

BoundResult make_result(double radius, std::size_t n, double tau, BoundSource source) {
  BoundResult r;
  r.radius = radius;
  r.n = n;
  r.tau = tau;
  r.confidence = -std::expm1(-tau);
  r.source = source;
  return r;
}

// Neumaier compensated accumulator
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) noexcept {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  [[nodiscard]] double value() const noexcept { return sum + comp; }
};

struct Remainder {
  double value = 0.0;
  double error = 0.0;
};

// Integral of g over [from, inf): an upper bound on sum_{j>from} g(j) for
// nonincreasing g.
Remainder integral_remainder(const std::function<double(double)>& g, double from) {
  boost::math::quadrature::exp_sinh<double> integrator;
  Remainder out;
  try {
    out.value = integrator.integrate(g, from, std::numeric_limits<double>::infinity(), 1e-12, &out.error);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::NonsummableTail, std::string("tail integral failed: ") + e.what());
  }
  if (!std::isfinite(out.value) || !std::isfinite(out.error)) {
    throw Error(ErrorKind::NonsummableTail, "tail integral diverges");
  }
  return out;
}

double sqrt_max_tau(double tau) { return std::sqrt(std::max(1.0, tau)); }

}  // namespace

std::string_view to_string(BoundSource source) noexcept {
  switch (source) {
    case BoundSource::General:
      return "general";
    case BoundSource::Simple:
      return "simple";
    case BoundSource::Polynomial:
      return "polynomial";
    case BoundSource::PolynomialMulti:
      return "polynomial-multi";
    case BoundSource::Exponential:
      return "exponential";
    case BoundSource::Sphere:
      return "sphere";
    case BoundSource::ModelFree:
      return "model-free";
  }
  return "unknown";
}

double BoundResult::diagnostic(std::string_view key) const noexcept {
  for (const auto& [k, v] : diagnostics) {
    if (k == key) return v;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

SequenceSpec::SequenceSpec(Fn closed_form) : tail_(std::move(closed_form)) {
  if (!tail_) throw Error(ErrorKind::InvalidParameter, "sequence generator is empty");
}

SequenceSpec SequenceSpec::constant(double value) {
  return SequenceSpec([value](double) { return value; });
}

SequenceSpec SequenceSpec::with_prefix(std::vector<double> values, Fn tail) {
  if (!tail) throw Error(ErrorKind::InvalidParameter, "sequence tail generator is empty");
  SequenceSpec s;
  s.prefix_ = std::move(values);
  s.tail_ = std::move(tail);
  return s;
}

double SequenceSpec::operator()(std::size_t j) const {
  if (j < prefix_.size()) return prefix_[j];
  return tail_(static_cast<double>(j));
}

double SequenceSpec::at(double x) const {
  if (!prefix_.empty() && x <= static_cast<double>(prefix_.size() - 1)) {
    if (x <= 0.0) return prefix_.front();
    const auto lo = static_cast<std::size_t>(std::floor(x));
    const double frac = x - static_cast<double>(lo);
    if (frac == 0.0) return prefix_[lo];
    return (1.0 - frac) * prefix_[lo] + frac * prefix_[lo + 1];
  }
  return tail_(x);
}

DecaySpec DecaySpec::polynomial(double C, double alpha) {
  if (!(C > 0.0)) throw Error(ErrorKind::InvalidParameter, "decay constant C must be positive");
  if (!(alpha > 1.0)) throw Error(ErrorKind::InvalidParameter, "polynomial decay needs alpha > 1");
  return DecaySpec(Kind::Polynomial, C, alpha, 1.0, 0.0, 0.0);
}

DecaySpec DecaySpec::polynomial_multi(double C, double alpha, double C_d, double beta) {
  if (!(C > 0.0) || !(C_d > 0.0)) throw Error(ErrorKind::InvalidParameter, "decay constants must be positive");
  if (!(beta >= 0.0)) throw Error(ErrorKind::InvalidParameter, "beta must be nonnegative");
  if (!(alpha > 1.0 + beta)) throw Error(ErrorKind::InvalidParameter, "polynomial decay needs alpha > 1 + beta");
  return DecaySpec(Kind::PolynomialMulti, C, alpha, C_d, beta, 0.0);
}

DecaySpec DecaySpec::exponential(double C1, double C2, double alpha) {
  if (!(C1 > 0.0) || !(C2 > 0.0)) throw Error(ErrorKind::InvalidParameter, "C1 and C2 must be positive");
  if (!(alpha >= 1.0)) throw Error(ErrorKind::InvalidParameter, "exponential decay needs alpha >= 1");
  return DecaySpec(Kind::Exponential, C1, alpha, 1.0, 0.0, C2);
}

double DecaySpec::c(double x) const {
  if (kind_ == Kind::Exponential) return c_ * std::exp(-c2_ * std::pow(x, 1.0 / alpha_));
  return c_ * std::pow(x + 1.0, -alpha_);
}

SequenceSpec DecaySpec::sequence() const {
  const DecaySpec copy = *this;
  return SequenceSpec([copy](double x) { return copy.c(x); });
}

BoundResult bound_general(const SequenceSpec& c, const SequenceSpec& d, const SequenceSpec& a, std::size_t n,
                          double tau) {
  check_tau(tau);
  const std::size_t min_last =
      std::max({n + 1, c.prefix_size(), d.prefix_size(), a.prefix_size()}) + 1;

  // far out the decrement underflows before a_j overflows; both integrands vanish there
  const auto g1 = [&](double t) {
    const double delta = std::max(c.at(t - 1.0) - c.at(t), 0.0);
    return delta == 0.0 ? 0.0 : a.at(t) * delta;
  };
  const auto g2 = [&](double t) {
    const double at = a.at(t);
    return std::isinf(at) ? 0.0 : d.at(t) / at;
  };
  Remainder r1;
  Remainder r2;
  bool have_remainder = false;

  Accumulator s1;
  Accumulator s2;
  double prev_c = c(n);
  double prev_a = 0.0;
  double last1 = 0.0;
  double last2 = 0.0;
  double first_ac = 0.0;
  std::size_t j = n;
  std::size_t chunk = 64;
  bool capped = false;
  while (true) {
    const std::size_t end = std::min(j + chunk, n + kMaxTerms);
    for (++j; j <= end; ++j) {
      const double cj = c(j);
      const double aj = a(j);
      const double dj = d(j);
      if (!(cj >= 0.0) || cj > prev_c * (1.0 + kMonotoneSlack)) {
        throw Error(ErrorKind::HypothesisViolation, "c is not nonnegative and nonincreasing at j = " + std::to_string(j));
      }
      if (!(aj > 0.0) || aj < prev_a * (1.0 - kMonotoneSlack)) {
        throw Error(ErrorKind::HypothesisViolation, "a is not positive and nondecreasing at j = " + std::to_string(j));
      }
      if (!(dj > 0.0)) throw Error(ErrorKind::HypothesisViolation, "d must be positive at j = " + std::to_string(j));
      last1 = aj * std::max(prev_c - cj, 0.0);
      last2 = dj / aj;
      s1.add(last1);
      s2.add(last2);
      if (j == n + 1) first_ac = aj * cj;
      prev_c = cj;
      prev_a = aj;
    }
    j = end;
    if (j >= min_last) {
      r1 = integral_remainder(g1, static_cast<double>(j));
      r2 = integral_remainder(g2, static_cast<double>(j));
      const bool small_terms = j - n >= kTermStopMinTerms && last1 <= kTermStop * s1.value() &&
                               last2 <= kTermStop * s2.value();
      const bool small_tail = r1.value + r1.error <= kStopRelative * s1.value() &&
                              r2.value + r2.error <= kStopRelative * s2.value();
      if (small_terms || small_tail) {
        have_remainder = true;
        break;
      }
    }
    if (j - n >= kMaxTerms) {
      capped = true;
      break;
    }
    chunk *= 2;
  }
  const double last_ac = a(j) * c(j);
  if (last_ac > first_ac * (1.0 + kMonotoneSlack) && last_ac > 0.0) {
    throw Error(ErrorKind::HypothesisViolation, "a_j c_j does not decrease over the evaluated range");
  }

  if (!have_remainder) {
    r1 = integral_remainder(g1, static_cast<double>(j));
    r2 = integral_remainder(g2, static_cast<double>(j));
  }
  const double total1 = s1.value() + r1.value + r1.error;
  const double total2 = s2.value() + r2.value + r2.error;

  BoundResult out = make_result(std::sqrt(5.0 * std::max(1.0, tau) * total1 * total2), n, tau, BoundSource::General);
  out.diagnostics = {{"sum_weighted_decrements", s1.value()},
                     {"sum_dims_over_weights", s2.value()},
                     {"remainder_weighted_decrements", r1.value + r1.error},
                     {"remainder_dims_over_weights", r2.value + r2.error},
                     {"checked_up_to", static_cast<double>(j)},
                     {"a_times_c_last", last_ac},
                     {"term_cap_reached", capped ? 1.0 : 0.0}};
  return out;
}

BoundResult bound_simple(const SequenceSpec& c, std::size_t n, double tau) {
  check_tau(tau);
  const std::size_t min_last = std::max(n + 1, c.prefix_size()) + 1;
  constexpr double eps = std::numeric_limits<double>::epsilon();

  const auto g = [&](double t) { return std::sqrt(std::max(c.at(t - 1.0) - c.at(t), 0.0)); };
  Remainder r;
  bool have_remainder = false;
  Accumulator s;
  double prev_c = c(n);
  double prev_delta = std::numeric_limits<double>::infinity();
  double last = 0.0;
  std::size_t j = n;
  std::size_t chunk = 64;
  bool capped = false;
  while (true) {
    const std::size_t end = std::min(j + chunk, n + kMaxTerms);
    for (++j; j <= end; ++j) {
      const double cj = c(j);
      if (!(cj >= 0.0) || cj > prev_c * (1.0 + kMonotoneSlack)) {
        throw Error(ErrorKind::HypothesisViolation, "c is not nonnegative and nonincreasing at j = " + std::to_string(j));
      }
      const double delta = std::max(prev_c - cj, 0.0);
      if (delta > prev_delta * (1.0 + kMonotoneSlack) + 8.0 * eps * prev_c) {
        throw Error(ErrorKind::HypothesisViolation,
                    "decrements c_{j-1} - c_j are not nonincreasing at j = " + std::to_string(j));
      }
      last = std::sqrt(delta);
      s.add(last);
      prev_c = cj;
      prev_delta = delta;
    }
    j = end;
    if (j >= min_last) {
      r = integral_remainder(g, static_cast<double>(j));
      const bool small_terms = j - n >= kTermStopMinTerms && last <= kTermStop * s.value();
      if (small_terms || r.value + r.error <= kStopRelative * s.value()) {
        have_remainder = true;
        break;
      }
    }
    if (j - n >= kMaxTerms) {
      capped = true;
      break;
    }
    chunk *= 2;
  }
  if (!have_remainder) r = integral_remainder(g, static_cast<double>(j));
  const double total = s.value() + r.value + r.error;
  BoundResult out = make_result(sqrt_max_tau(tau) * std::sqrt(5.0) * total, n, tau, BoundSource::Simple);
  out.diagnostics = {{"sum_root_decrements", s.value()},
                     {"remainder", r.value + r.error},
                     {"checked_up_to", static_cast<double>(j)},
                     {"term_cap_reached", capped ? 1.0 : 0.0}};
  return out;
}

BoundResult bound_polynomial_multi(double C, double C_d, double alpha, double beta, std::size_t n, double tau) {
  check_tau(tau);
  const DecaySpec spec = DecaySpec::polynomial_multi(C, alpha, C_d, beta);
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "polynomial bounds need n >= 1");
  const double gap = alpha - beta - 1.0;
  const double rate = std::pow(static_cast<double>(n), -gap / 2.0);
  const double base = 20.0 * std::pow(2.0, beta) * spec.C() * spec.C_d() * std::max(1.0, tau);
  BoundResult out = make_result(std::sqrt(alpha * base) / gap * rate, n, tau, BoundSource::PolynomialMulti);
  out.diagnostics = {{"printed_radius", std::sqrt(base) / gap * rate}};
  return out;
}

BoundResult bound_polynomial(double C, double alpha, std::size_t n, double tau) {
  if (!(alpha > 1.0)) throw Error(ErrorKind::InvalidParameter, "polynomial decay needs alpha > 1");
  BoundResult out = bound_polynomial_multi(C, 1.0, alpha, 0.0, n, tau);
  out.source = BoundSource::Polynomial;
  return out;
}

bool exponential_window(double C2, double alpha, std::size_t n) noexcept {
  return static_cast<double>(n) > std::pow(11.0 * (alpha - 1.0) / C2, alpha) + 1.0;
}

BoundResult bound_exponential(double C1, double C2, double alpha, std::size_t n, double tau) {
  check_tau(tau);
  const DecaySpec spec = DecaySpec::exponential(C1, C2, alpha);
  const double m = std::max(1.0, tau);
  if (alpha == 1.0) {
    const double core = std::sqrt(5.0 * m * spec.C1() * std::expm1(C2)) * std::exp(-C2 * static_cast<double>(n) / 2.0);
    const double radius = core / std::expm1(C2 / 2.0);
    BoundResult out = make_result(radius, n, tau, BoundSource::Exponential);
    out.diagnostics = {{"printed_radius", radius * std::exp(C2)}};
    return out;
  }
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "exponential bound with alpha > 1 needs n >= 1");
  const double shifted = static_cast<double>(n - 1);
  const double shape = std::sqrt(121.0 * C1 * C2 * alpha * m / 20.0) *
                       std::pow(shifted, (alpha - 1.0) / (2.0 * alpha)) *
                       std::exp(-(C2 / 2.0) * std::pow(shifted, 1.0 / alpha));
  BoundResult out = make_result(shape * 2.0 / C2, n, tau, BoundSource::Exponential);
  out.valid = exponential_window(C2, alpha, n);
  out.diagnostics = {{"window_start", std::pow(11.0 * (alpha - 1.0) / C2, alpha) + 1.0},
                     {"printed_radius", shape * std::pow(C2 / 2.0, alpha - 2.0)}};
  return out;
}

TailIntegral tail_integral_bound(const DecaySpec& decay, std::size_t n) {
  if (decay.kind() != DecaySpec::Kind::Exponential) {
    throw Error(ErrorKind::InvalidParameter, "tail integral bound needs exponential decay");
  }
  if (n < 1) throw Error(ErrorKind::InvalidParameter, "tail integral bound needs n >= 1");
  const double C1 = decay.C1();
  const double C2 = decay.C2();
  const double alpha = decay.alpha();
  const double start = static_cast<double>(n - 1);
  TailIntegral out;
  if (exponential_window(C2, alpha, n)) {
    out.closed_form = true;
    const double shape = 1.1 * std::sqrt(C1 * C2 * alpha) * std::pow(start, (alpha - 1.0) / (2.0 * alpha)) *
                         std::exp(-(C2 / 2.0) * std::pow(start, 1.0 / alpha));
    out.value = shape * 2.0 / C2;
    out.printed_value = shape * std::pow(C2 / 2.0, alpha - 2.0);
    return out;
  }
  // sqrt|f'(t)| with f(t) = C1 exp(-C2 t^{1/alpha})
  const auto integrand = [=](double t) {
    if (t <= 0.0) return alpha == 1.0 ? std::sqrt(C1 * C2) : std::numeric_limits<double>::infinity();
    const double root = std::pow(t, 1.0 / alpha);
    return std::sqrt(C1 * C2 / alpha * root / t) * std::exp(-0.5 * C2 * root);
  };
  const Remainder r = integral_remainder(integrand, start);
  out.value = r.value + r.error;
  out.quadrature_error = r.error;
  return out;
}

LogInequality log_inequality(double x) {
  if (!(x >= 0.0 && x < 0.5)) throw Error(ErrorKind::Domain, "log inequality needs 0 <= x < 1/2");
  return {-x - 0.5 * std::log1p(-2.0 * x), x * x / (1.0 - 2.0 * x)};
}

}  // namespace gpconc
