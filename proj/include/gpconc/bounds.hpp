#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gpconc {

enum class BoundSource { General, Simple, Polynomial, PolynomialMulti, Exponential, Sphere, ModelFree };

std::string_view to_string(BoundSource source) noexcept;

struct BoundResult {
  double radius = 0.0;
  std::size_t n = 0;
  double tau = 0.0;
  double confidence = 0.0;  // 1 - e^{-tau}
  bool valid = true;
  BoundSource source = BoundSource::General;
  std::vector<std::pair<std::string, double>> diagnostics;

  /// NaN when the key is absent.
  [[nodiscard]] double diagnostic(std::string_view key) const noexcept;
};

/// A real sequence indexed by j >= 0 together with a continuous extension
/// used to bound infinite tails by integrals.
class SequenceSpec {
 public:
  using Fn = std::function<double(double)>;

  explicit SequenceSpec(Fn closed_form);
  static SequenceSpec constant(double value);
  /// values[j] for j < values.size(), tail(j) afterwards.
  static SequenceSpec with_prefix(std::vector<double> values, Fn tail);

  [[nodiscard]] double operator()(std::size_t j) const;
  /// Continuous extension; inside the explicit prefix it interpolates linearly.
  [[nodiscard]] double at(double x) const;
  [[nodiscard]] std::size_t prefix_size() const noexcept { return prefix_.size(); }

 private:
  SequenceSpec() = default;
  std::vector<double> prefix_;
  Fn tail_;
};

class DecaySpec {
 public:
  enum class Kind { Polynomial, PolynomialMulti, Exponential };

  /// c_n <= C (n+1)^{-alpha}, alpha > 1
  static DecaySpec polynomial(double C, double alpha);
  /// additionally d_n <= C_d (n+1)^beta, alpha > 1 + beta, beta >= 0
  static DecaySpec polynomial_multi(double C, double alpha, double C_d, double beta);
  /// c_n <= C1 exp(-C2 n^{1/alpha}), alpha >= 1
  static DecaySpec exponential(double C1, double C2, double alpha);

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] double C() const noexcept { return c_; }
  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] double C_d() const noexcept { return c_d_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] double C1() const noexcept { return c_; }
  [[nodiscard]] double C2() const noexcept { return c2_; }

  /// Model value of c at real index x >= 0.
  [[nodiscard]] double c(double x) const;
  [[nodiscard]] SequenceSpec sequence() const;

 private:
  DecaySpec(Kind kind, double c, double alpha, double c_d, double beta, double c2)
      : kind_(kind), c_(c), alpha_(alpha), c_d_(c_d), beta_(beta), c2_(c2) {}
  Kind kind_;
  double c_;
  double alpha_;
  double c_d_;
  double beta_;
  double c2_;
};

/// sqrt(5 max(1,tau) S1 S2), S1 = sum_{j>n} a_j (c_{j-1} - c_j),
/// S2 = sum_{j>n} d_j / a_j, with integral-bounded remainders added.
BoundResult bound_general(const SequenceSpec& c, const SequenceSpec& d, const SequenceSpec& a, std::size_t n,
                          double tau);

/// sqrt(5 max(1,tau)) sum_{j>n} sqrt(c_{j-1} - c_j)
BoundResult bound_simple(const SequenceSpec& c, std::size_t n, double tau);

BoundResult bound_polynomial(double C, double alpha, std::size_t n, double tau);

BoundResult bound_polynomial_multi(double C, double C_d, double alpha, double beta, std::size_t n, double tau);

BoundResult bound_exponential(double C1, double C2, double alpha, std::size_t n, double tau);

/// Window of the closed-form exponential tail estimate: n > (11(alpha-1)/C2)^alpha + 1.
bool exponential_window(double C2, double alpha, std::size_t n) noexcept;

struct TailIntegral {
  double value = 0.0;
  bool closed_form = false;
  double quadrature_error = 0.0;
  double printed_value = 0.0;  // closed form with the (C2/2)^{alpha-2} prefactor; 0 outside the window
};

/// Upper bound on sum_{j>n} sqrt(c_{j-1} - c_j) for exponential decay, by
/// the closed form inside its window and by quadrature of the integral of
/// sqrt|f'| over [n-1, inf) outside it.
TailIntegral tail_integral_bound(const DecaySpec& decay, std::size_t n);

struct LogInequality {
  double middle = 0.0;  // -x - ln(1-2x)/2
  double upper = 0.0;   // x^2 / (1-2x)
};

/// Terms of 0 <= -x - ln(1-2x)/2 <= x^2/(1-2x) for 0 <= x < 1/2.
LogInequality log_inequality(double x);

}  // namespace gpconc
