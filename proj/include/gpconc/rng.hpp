#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <span>

namespace gpconc {

/// Philox4x32-10 counter-based generator. The 64-bit key selects an
/// experiment, the upper 64 counter bits select a replicate stream, and the
/// lower 64 counter bits advance within the stream.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t key, std::uint64_t stream) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// One application of the ten-round bijection.
  static Block block(Block counter, Key key) noexcept;

 private:
  Key key_;
  Block counter_;
  Block buffer_{};
  unsigned position_ = 4;
};

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : seed_(seed), stream_(stream), engine_(seed, stream) {}

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

  /// Uniform double in the open interval (0, 1) with 53 random bits.
  double uniform() noexcept;
  double normal() { return normal_(engine_); }
  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
  }
  /// Chi-square variate with the given (positive) degrees of freedom.
  double chi_square(double dof) {
    std::gamma_distribution<double> gamma(0.5 * dof, 2.0);
    return gamma(engine_);
  }

  Philox4x32& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gpconc
