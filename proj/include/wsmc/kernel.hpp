#pragma once

// Per-PE cross-section computation: bracket search, linear and stochastic
// interpolation, and density-weighted accumulation into a macroscopic vector.
//
// All arithmetic is FP32 and the expression order is fixed; the reference
// oracles and the distributed pipeline call the same functions, so results
// compare bitwise.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsmc/error.hpp"
#include "wsmc/rng.hpp"
#include "wsmc/xsdata.hpp"

namespace wsmc {

enum class InterpMode { linear, stochastic };

inline std::string_view to_string(InterpMode m) noexcept {
  return m == InterpMode::linear ? "linear" : "stochastic";
}

inline InterpMode parse_interp_mode(std::string_view s) {
  if (s == "linear") return InterpMode::linear;
  if (s == "stochastic") return InterpMode::stochastic;
  throw Error(ErrorKind::invalid_configuration, "unknown interpolation mode '" + std::string(s) + "'");
}

struct Particle {
  float energy = 0.0f;
  std::vector<float> macro_xs;
  std::uint64_t id = 0;
};

struct InterpBracket {
  std::size_t lower_index = 0;
  float e_low = 0.0f;
  float e_high = 0.0f;
  float f = 0.0f;
};

/// Largest i with energies[i] <= e, clamped to size-2 so i+1 is always valid.
inline std::size_t lower_bound(std::span<const float> energies, float e) {
  if (energies.size() < 2) throw Error(ErrorKind::invalid_configuration, "energy grid shorter than 2 points");
  if (!(e >= energies.front() && e <= energies.back()))
    throw Error(ErrorKind::out_of_range, "energy " + std::to_string(e) + " outside grid [" +
                                             std::to_string(energies.front()) + ", " +
                                             std::to_string(energies.back()) + "]");
  std::size_t lo = 0;
  std::size_t hi = energies.size() - 1;  // energies[lo] <= e holds; search within [lo, hi)
  while (hi - lo > 1) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (energies[mid] <= e)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

inline float interp_factor(float e_low, float e_high, float e) {
  if (!(e_low < e_high)) throw Error(ErrorKind::degenerate_bracket, "bracket has e_low >= e_high");
  return (e_high - e) / (e_high - e_low);
}

inline InterpBracket make_bracket(std::span<const float> energies, std::size_t lower, float e) {
  const float lo = energies[lower];
  const float hi = energies[lower + 1];
  return {lower, lo, hi, interp_factor(lo, hi, e)};
}

/// sigma_high - f * (sigma_high - sigma_low) per channel, written into `out`.
inline void micro_xs_linear(std::span<const float> xs, std::size_t n_channels, const InterpBracket& b,
                            std::span<float> out) {
  const float* low = xs.data() + b.lower_index * n_channels;
  const float* high = low + n_channels;
  for (std::size_t r = 0; r < n_channels; ++r) out[r] = high[r] - b.f * (high[r] - low[r]);
}

inline std::vector<float> micro_xs_linear(std::span<const float> xs, std::size_t n_channels,
                                          const InterpBracket& b) {
  if ((b.lower_index + 2) * n_channels > xs.size())
    throw Error(ErrorKind::out_of_range, "bracket index outside the cross-section table");
  std::vector<float> out(n_channels);
  micro_xs_linear(xs, n_channels, b, out);
  return out;
}

/// Picks the higher gridpoint when e >= s, s uniform in [e_low, e_high).
/// Consumes exactly one draw and returns the selected point index.
///
/// s stays in double: rounding it to float makes e == s a tie of probability
/// about one ulp over the bracket width, which skews narrow brackets.
inline std::size_t stochastic_select(std::span<const float> energies, std::size_t lower, float e,
                                     std::uint64_t& rng_state) noexcept {
  const auto draw = lcg_next(rng_state);
  rng_state = draw.state;
  const double lo = energies[lower];
  const double hi = energies[lower + 1];
  const double s = lo + draw.u * (hi - lo);
  return static_cast<double>(e) >= s ? lower + 1 : lower;
}

struct StochasticResult {
  std::vector<float> micro;
  std::uint64_t rng_state;
  bool selected_high;
};

inline StochasticResult micro_xs_stochastic(const GridSlice& slice, std::size_t lower, float e,
                                            std::uint64_t rng_state) {
  if (lower + 1 >= slice.n_points() || !(slice.energies[lower] <= e && e <= slice.energies[lower + 1]))
    throw Error(ErrorKind::out_of_range, "slice does not bracket energy at the given index");
  const std::size_t pick = stochastic_select(slice.energies, lower, e, rng_state);
  const auto ch = slice.channels_at(pick);
  return {{ch.begin(), ch.end()}, rng_state, pick == lower + 1};
}

/// macro[r] += density * micro[r], in channel order.
inline void accumulate(std::span<float> macro, std::span<const float> micro, float density) {
  if (macro.size() != micro.size())
    throw Error(ErrorKind::invalid_configuration, "macroscopic and microscopic vectors differ in length");
  for (std::size_t r = 0; r < macro.size(); ++r) macro[r] += density * micro[r];
}

inline Particle accumulate(Particle p, std::span<const float> micro, float density) {
  accumulate(std::span<float>(p.macro_xs), micro, density);
  return p;
}

/// Looks up one table (full grid or band slice) and accumulates into `macro`.
/// `scratch` must hold n_channels floats.
inline void lookup_table(std::span<const float> energies, std::span<const float> xs, std::size_t n_channels,
                         float density, float e, InterpMode mode, std::uint64_t& rng_state,
                         std::span<float> macro, std::span<float> scratch) {
  const std::size_t lower = lower_bound(energies, e);
  if (mode == InterpMode::linear) {
    micro_xs_linear(xs, n_channels, make_bracket(energies, lower, e), scratch);
    accumulate(macro, std::span<const float>(scratch.data(), n_channels), density);
  } else {
    const std::size_t pick = stochastic_select(energies, lower, e, rng_state);
    accumulate(macro, xs.subspan(pick * n_channels, n_channels), density);
  }
}

struct LookupResult {
  std::vector<float> macro_xs;
  std::uint64_t rng_state;
};

/// Shared-memory single-kernel lookup over every nuclide in index order.
inline LookupResult lookup_all_nuclides(const Material& m, float e, InterpMode mode, std::uint64_t rng_state) {
  const std::size_t channels = m.n_channels();
  std::vector<float> macro(channels, 0.0f);
  std::vector<float> scratch(channels);
  for (std::size_t n = 0; n < m.n_nuclides(); ++n) {
    const auto& g = m.nuclides[n];
    lookup_table(g.energies, g.xs, channels, m.densities[n], e, mode, rng_state, macro, scratch);
  }
  return {std::move(macro), rng_state};
}

}  // namespace wsmc
