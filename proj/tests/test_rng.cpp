#include <gtest/gtest.h>

#include <cmath>
#include <cstdint>
#include <set>

#include "wsmc/rng.hpp"

namespace {

using u128 = unsigned __int128;
constexpr std::uint64_t kA = 2806196910506780709ULL;
constexpr u128 kModulus = u128{1} << 63;

std::uint64_t step_oracle(std::uint64_t s) { return static_cast<std::uint64_t>((u128{kA} * s + 1) % kModulus); }

// Inverse of an odd multiplier modulo 2^64 by Newton iteration.
std::uint64_t inverse_odd(std::uint64_t a) {
  std::uint64_t x = a;
  for (int i = 0; i < 6; ++i) x *= 2 - a * x;
  return x;
}

}  // namespace

TEST(Lcg, FirstStepFromZeroIsIncrementOnly) {
  const auto d = wsmc::lcg_next(0);
  EXPECT_EQ(d.state, 1u);
  EXPECT_EQ(d.u, std::ldexp(1.0, -63));
}

TEST(Lcg, StepFromOne) {
  const auto d = wsmc::lcg_next(1);
  EXPECT_EQ(d.state, (kA + 1) & ((1ULL << 63) - 1));
  EXPECT_EQ(d.u, static_cast<double>(d.state) / std::ldexp(1.0, 63));
}

TEST(Lcg, MatchesWideArithmeticOracle) {
  std::uint64_t s = 12345;
  for (int i = 0; i < 10000; ++i) {
    const auto d = wsmc::lcg_next(s);
    ASSERT_EQ(d.state, step_oracle(s));
    ASSERT_GE(d.u, 0.0);
    ASSERT_LT(d.u, 1.0);
    s = d.state;
  }
}

TEST(Lcg, TopStateStaysBelowOne) {
  // Solve a*s + 1 = 2^63 - 1 (mod 2^63) so the next state is the largest one.
  const std::uint64_t target = (1ULL << 63) - 2;
  const std::uint64_t s = (target * inverse_odd(kA)) & ((1ULL << 63) - 1);
  const auto d = wsmc::lcg_next(s);
  ASSERT_EQ(d.state, (1ULL << 63) - 1);
  EXPECT_LT(d.u, 1.0);
}

TEST(Lcg, MeanOfMillionDraws) {
  wsmc::Lcg rng(42);
  double sum = 0.0;
  for (int i = 0; i < 1000000; ++i) sum += rng.next();
  const double mean = sum / 1e6;
  EXPECT_GE(mean, 0.497);
  EXPECT_LE(mean, 0.503);
}

TEST(Lcg, BelowStaysInRange) {
  wsmc::Lcg rng(7);
  for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 10ULL, 1000ULL})
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(bound), bound);
}

TEST(Mix, MatchesIndependentDefinition) {
  for (std::uint64_t seed : {0ULL, 1ULL, 42ULL, ~0ULL})
    for (std::uint64_t key : {0ULL, 5ULL, 1ULL << 32, 1ULL << 56}) {
      std::uint64_t s = static_cast<std::uint64_t>((seed ^ (key * 0x9E3779B97F4A7C15ULL)) % kModulus);
      for (int i = 0; i < 8; ++i) s = step_oracle(s);
      EXPECT_EQ(wsmc::mix(seed, key), s);
    }
}

TEST(Mix, DistinctKeysGiveDistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 10000; ++k) seen.insert(wsmc::mix(1, k));
  EXPECT_EQ(seen.size(), 10000u);
}
