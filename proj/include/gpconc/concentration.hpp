#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gpconc/rng.hpp"

namespace gpconc {

/// Nonnegative summable weights b_1, b_2, ... with cached norms. Norms of
/// infinite families include tail remainders, so they are upper bounds.
class WeightSeq {
 public:
  enum class Family { Geometric, Polynomial, Finite };

  /// b_j = scale * ratio^j, 0 <= ratio < 1
  static WeightSeq geometric(double ratio, double scale = 1.0);
  /// b_j = scale * j^{-power}, power > 1
  static WeightSeq polynomial(double power, double scale = 1.0);
  static WeightSeq finite(std::vector<double> values);
  /// count weights drawn uniformly from (0, 1) on a dedicated stream.
  static WeightSeq finite_random(std::size_t count, std::uint64_t seed);

  [[nodiscard]] Family family() const noexcept { return family_; }
  [[nodiscard]] std::string label() const;

  /// b_j for j >= 1
  [[nodiscard]] double operator()(std::size_t j) const noexcept;
  [[nodiscard]] double l1() const noexcept { return l1_; }
  [[nodiscard]] double l2() const noexcept { return l2_; }
  [[nodiscard]] double linf() const noexcept { return linf_; }

  /// Upper bound on sum_{j>J} b_j^2.
  [[nodiscard]] double tail_square_sum(std::size_t J) const;

  /// Smallest J with sqrt(2 * tail_square_sum(J)) < trunc_tol.
  [[nodiscard]] std::size_t truncation_length(double trunc_tol) const;

  [[nodiscard]] bool is_zero() const noexcept { return linf_ == 0.0; }

 private:
  WeightSeq(Family family, double a, double b) : family_(family), param_a_(a), param_b_(b) {}
  void compute_norms();

  Family family_;
  double param_a_ = 0.0;  // ratio or power
  double param_b_ = 1.0;  // scale
  std::vector<double> values_;
  double l1_ = 0.0;
  double l2_ = 0.0;
  double linf_ = 0.0;
};

/// 2 |b|_2 sqrt(tau) + 2 |b|_inf tau
double chisq_tail_bound(const WeightSeq& b, double tau);

/// c tau + sqrt(2 v tau)
double massart_tail_radius(double v, double c, double tau);

/// One draw of sum_j b_j (r_j^2 - 1), truncated where the tail standard
/// deviation drops below trunc_tol.
double sample_Z(const WeightSeq& b, RngStream& rng, double trunc_tol);

struct ViolationRate {
  double rate = 0.0;
  double ci_halfwidth = 0.0;  // 3 sqrt(rate (1 - rate) / M)
  std::size_t violations = 0;
  std::size_t replicates = 0;
  double bound = 0.0;
};

/// Fraction of M draws of Z reaching chisq_tail_bound(b, tau); replicate i
/// uses stream i of seed. With a zero bound the event is Z > 0.
ViolationRate mc_violation_rate(const WeightSeq& b, double tau, std::size_t M, std::uint64_t seed,
                                double trunc_tol = 1e-3, unsigned workers = 1);

/// Binomial 3-sigma acceptance threshold e^{-tau} + 3 sqrt(e^{-tau}(1-e^{-tau})/M).
double violation_threshold(double tau, std::size_t M);

}  // namespace gpconc
