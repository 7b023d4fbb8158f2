#pragma once

// Synthetic cross-section data and its energy-band decomposition.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "wsmc/error.hpp"
#include "wsmc/rng.hpp"

namespace wsmc {

inline constexpr std::size_t kBytesPerValue = 4;
inline constexpr std::size_t kDefaultMemoryBudget = 49152;  // 48 kB of PE SRAM

/// One nuclide's energy grid and its per-gridpoint reaction-channel table.
/// `xs` is row-major: xs[point * n_channels + channel].
struct NuclideGrid {
  std::vector<float> energies;
  std::vector<float> xs;
  std::size_t n_channels = 0;

  std::size_t n_gridpoints() const noexcept { return energies.size(); }

  std::span<const float> channels_at(std::size_t point) const noexcept {
    return {xs.data() + point * n_channels, n_channels};
  }

  friend bool operator==(const NuclideGrid&, const NuclideGrid&) = default;
};

struct Material {
  std::vector<NuclideGrid> nuclides;
  std::vector<float> densities;

  std::size_t n_nuclides() const noexcept { return nuclides.size(); }
  std::size_t n_channels() const noexcept {
    return nuclides.empty() ? 0 : nuclides.front().n_channels;
  }
  std::size_t n_gridpoints() const noexcept {
    return nuclides.empty() ? 0 : nuclides.front().n_gridpoints();
  }
  /// Energy plus cross-section payload in bytes (densities excluded).
  std::size_t payload_bytes() const noexcept {
    std::size_t total = 0;
    for (const auto& g : nuclides) total += (g.energies.size() + g.xs.size()) * kBytesPerValue;
    return total;
  }

  friend bool operator==(const Material&, const Material&) = default;
};

/// Energy interval owned by one grid row: [e_lo, e_hi), except the top band
/// which also contains e_hi = 1.
struct EnergyBand {
  std::size_t row_index = 0;
  float e_lo = 0.0f;
  float e_hi = 1.0f;
  bool closed_above = true;

  bool contains(float e) const noexcept {
    return e >= e_lo && (e < e_hi || (closed_above && e == e_hi));
  }
};

inline EnergyBand energy_band(std::size_t row, std::size_t n_bands) {
  if (n_bands == 0 || row >= n_bands)
    throw Error(ErrorKind::invalid_configuration, "band row out of range");
  const auto edge = [n_bands](std::size_t r) {
    return static_cast<float>(static_cast<double>(r) / static_cast<double>(n_bands));
  };
  return {row, edge(row), row + 1 == n_bands ? 1.0f : edge(row + 1), row + 1 == n_bands};
}

/// Row whose band contains `e`. Consistent with energy_band() edges.
inline std::size_t band_of(float e, std::size_t n_bands) {
  if (!(e >= 0.0f && e <= 1.0f))
    throw Error(ErrorKind::out_of_range, "particle energy " + std::to_string(e) + " outside [0,1]");
  auto r = static_cast<std::size_t>(static_cast<double>(e) * static_cast<double>(n_bands));
  r = std::min(r, n_bands - 1);
  while (r > 0 && e < energy_band(r, n_bands).e_lo) --r;
  while (r + 1 < n_bands && e >= energy_band(r + 1, n_bands).e_lo) ++r;
  return r;
}

/// A nuclide's gridpoints inside one band plus one padding point on each side.
struct GridSlice {
  std::size_t nuclide_id = 0;
  EnergyBand band;
  std::vector<float> energies;
  std::vector<float> xs;
  std::size_t n_channels = 0;
  std::size_t global_offset = 0;

  std::size_t n_points() const noexcept { return energies.size(); }
  std::span<const float> channels_at(std::size_t point) const noexcept {
    return {xs.data() + point * n_channels, n_channels};
  }
};

namespace detail {

// Narrow a uniform draw to a float strictly below 1.
inline float unit_float(double u) noexcept {
  const auto f = static_cast<float>(u);
  return f < 1.0f ? f : std::nextafter(1.0f, 0.0f);
}

}  // namespace detail

inline NuclideGrid generate_nuclide_grid(std::uint64_t seed, std::size_t nuclide_id,
                                         std::size_t n_gridpoints, std::size_t n_channels) {
  if (n_gridpoints < 2)
    throw Error(ErrorKind::invalid_configuration, "a nuclide grid needs at least 2 gridpoints");
  if (n_channels < 1)
    throw Error(ErrorKind::invalid_configuration, "a nuclide grid needs at least 1 channel");

  Lcg rng(mix(seed, nuclide_id));
  NuclideGrid grid;
  grid.n_channels = n_channels;
  grid.energies.resize(n_gridpoints);
  grid.energies.front() = 0.0f;
  grid.energies.back() = 1.0f;
  for (std::size_t i = 1; i + 1 < n_gridpoints; ++i) grid.energies[i] = detail::unit_float(rng.next());
  std::sort(grid.energies.begin() + 1, grid.energies.end() - 1);
  for (std::size_t i = 1; i + 1 < n_gridpoints; ++i) {
    if (grid.energies[i] <= grid.energies[i - 1])
      grid.energies[i] = std::nextafter(grid.energies[i - 1], 2.0f);
  }
  if (n_gridpoints > 2 && grid.energies[n_gridpoints - 2] >= 1.0f)
    throw Error(ErrorKind::invalid_configuration, "too many gridpoints to keep FP32 energies distinct");

  grid.xs.resize(n_gridpoints * n_channels);
  for (auto& v : grid.xs) v = detail::unit_float(rng.next());
  return grid;
}

inline Material generate_material(std::uint64_t seed, std::size_t n_nuclides, std::size_t n_gridpoints,
                                  std::size_t n_channels) {
  if (n_nuclides < 1) throw Error(ErrorKind::invalid_configuration, "a material needs at least 1 nuclide");
  Material m;
  m.nuclides.reserve(n_nuclides);
  m.densities.reserve(n_nuclides);
  for (std::size_t n = 0; n < n_nuclides; ++n) {
    m.nuclides.push_back(generate_nuclide_grid(seed, n, n_gridpoints, n_channels));
    Lcg rng(mix(seed, kDensityStreamBase + n));
    m.densities.push_back(static_cast<float>(1.0 - rng.next()));
  }
  return m;
}

/// Checks the Material invariants; throws invalid_configuration on failure.
inline void validate(const Material& m) {
  if (m.nuclides.empty()) throw Error(ErrorKind::invalid_configuration, "material has no nuclides");
  if (m.densities.size() != m.nuclides.size())
    throw Error(ErrorKind::invalid_configuration, "density count does not match nuclide count");
  for (std::size_t n = 0; n < m.nuclides.size(); ++n) {
    const auto& g = m.nuclides[n];
    if (!(m.densities[n] > 0.0f))
      throw Error(ErrorKind::invalid_configuration, "nuclide " + std::to_string(n) + " has non-positive density");
    if (g.energies.size() < 2 || g.xs.size() != g.energies.size() * g.n_channels)
      throw Error(ErrorKind::invalid_configuration, "nuclide " + std::to_string(n) + " has a malformed table");
    if (!std::is_sorted(g.energies.begin(), g.energies.end(), std::less_equal<>{}))
      throw Error(ErrorKind::invalid_configuration, "nuclide " + std::to_string(n) + " energies not increasing");
  }
}

inline GridSlice slice_for_band(const NuclideGrid& grid, std::size_t nuclide_id, const EnergyBand& band) {
  const auto& e = grid.energies;
  // First in-band point and one past the last in-band point.
  auto first = std::lower_bound(e.begin(), e.end(), band.e_lo);
  auto last = band.closed_above ? std::upper_bound(first, e.end(), band.e_hi)
                                : std::lower_bound(first, e.end(), band.e_hi);
  if (first != e.begin()) --first;  // lower padding
  if (last != e.end()) ++last;      // upper padding

  GridSlice s;
  s.nuclide_id = nuclide_id;
  s.band = band;
  s.n_channels = grid.n_channels;
  s.global_offset = static_cast<std::size_t>(first - e.begin());
  s.energies.assign(first, last);
  s.xs.assign(grid.xs.begin() + static_cast<std::ptrdiff_t>(s.global_offset * grid.n_channels),
              grid.xs.begin() + static_cast<std::ptrdiff_t>((s.global_offset + s.energies.size()) * grid.n_channels));
  return s;
}

inline std::size_t slice_bytes(const GridSlice& s) noexcept {
  return s.n_points() * kBytesPerValue + s.n_points() * s.n_channels * kBytesPerValue;
}

inline std::size_t footprint_bytes(std::span<const GridSlice> slices, std::size_t buffer_reserve) noexcept {
  std::size_t total = buffer_reserve;
  for (const auto& s : slices) total += slice_bytes(s);
  return total;
}

}  // namespace wsmc
