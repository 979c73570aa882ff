#pragma once

#include <array>
#include <cstdint>

namespace bivlogit {

// Philox4x32-10 stream addressed by (seed, household, period, purpose).
// Every address yields an independent, reproducible sequence, so draws do not
// depend on the order in which households are processed.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t household, std::uint32_t period,
             std::uint32_t purpose = 0);

  std::uint64_t next_u64();
  double uniform();  // in (0, 1)
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 4> buf_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fixed purposes so that different kinds of draws never share a stream.
namespace purpose {
inline constexpr std::uint32_t initial = 1;
inline constexpr std::uint32_t alpha = 2;
inline constexpr std::uint32_t alpha2 = 3;
inline constexpr std::uint32_t transition = 4;
inline constexpr std::uint32_t covariate = 5;
inline constexpr std::uint32_t resample = 6;
inline constexpr std::uint32_t start = 7;
inline constexpr std::uint32_t draw = 8;
}  // namespace purpose

}  // namespace bivlogit
