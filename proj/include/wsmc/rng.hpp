#pragma once

#include <cstdint>
#include <utility>

namespace wsmc {

// 63-bit linear congruential generator (multiplier 2806196910506780709,
// increment 1, modulus 2^63). Every random stream in the library is one of
// these, so a seed fully determines a run.
inline constexpr std::uint64_t kLcgMultiplier = 2806196910506780709ULL;
inline constexpr std::uint64_t kLcgIncrement = 1ULL;
inline constexpr std::uint64_t kLcgMask = (1ULL << 63) - 1;
inline constexpr double kLcgNorm = 1.0 / 9223372036854775808.0;  // 2^-63

struct LcgDraw {
  std::uint64_t state;
  double u;  // in [0,1)
};

constexpr LcgDraw lcg_next(std::uint64_t state) noexcept {
  const std::uint64_t next = (kLcgMultiplier * state + kLcgIncrement) & kLcgMask;
  // The top 512 states round to 2^63 when converted; keep u below 1.
  const double u = static_cast<double>(next) * kLcgNorm;
  return {next, u < 1.0 ? u : 0x1.fffffffffffffp-1};
}

/// Derive an independent stream state from a base seed and a stream key.
constexpr std::uint64_t mix(std::uint64_t seed, std::uint64_t key) noexcept {
  std::uint64_t state = (seed ^ (key * 0x9E3779B97F4A7C15ULL)) & kLcgMask;
  for (int i = 0; i < 8; ++i) state = lcg_next(state).state;
  return state;
}

// Stream keys. Nuclide grids use the nuclide id directly.
inline constexpr std::uint64_t kDensityStreamBase = 1ULL << 32;
inline constexpr std::uint64_t kColumnStreamBase = 1ULL << 48;
inline constexpr std::uint64_t kInterpStreamBase = 1ULL << 56;

/// Stateful wrapper around lcg_next.
class Lcg {
 public:
  constexpr explicit Lcg(std::uint64_t state = 0) noexcept : state_(state & kLcgMask) {}

  constexpr double next() noexcept {
    const auto d = lcg_next(state_);
    state_ = d.state;
    return d.u;
  }

  /// Uniform integer in [0, bound); bound must be > 0.
  constexpr std::uint64_t below(std::uint64_t bound) noexcept {
    auto v = static_cast<std::uint64_t>(next() * static_cast<double>(bound));
    return v < bound ? v : bound - 1;
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace wsmc
