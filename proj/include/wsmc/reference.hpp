#pragma once

// Shared-memory baselines: the unionized energy grid, an oracle that replays
// the round-robin accumulation order, and an energy-sorted batch lookup.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "wsmc/error.hpp"
#include "wsmc/kernel.hpp"
#include "wsmc/xsdata.hpp"

namespace wsmc {

struct UnionizedGrid {
  std::vector<float> union_energies;
  // index_table[u * n_nuclides + n]: largest index in nuclide n whose energy
  // is <= union_energies[u]; 0 when the union point lies below the grid.
  std::vector<std::uint32_t> index_table;
  std::size_t n_nuclides = 0;

  std::size_t size() const noexcept { return union_energies.size(); }
  std::uint32_t index(std::size_t union_point, std::size_t nuclide) const noexcept {
    return index_table[union_point * n_nuclides + nuclide];
  }
  std::size_t memory_bytes() const noexcept {
    return union_energies.size() * sizeof(float) + index_table.size() * sizeof(std::uint32_t);
  }
};

inline std::size_t ueg_memory_bytes(std::size_t n_union, std::size_t n_nuclides, std::size_t index_width) noexcept {
  return n_union * kBytesPerValue + n_union * n_nuclides * index_width;
}

inline UnionizedGrid build_ueg(const Material& m) {
  UnionizedGrid ueg;
  ueg.n_nuclides = m.n_nuclides();
  std::size_t total = 0;
  for (const auto& g : m.nuclides) total += g.n_gridpoints();
  ueg.union_energies.reserve(total);
  for (const auto& g : m.nuclides) ueg.union_energies.insert(ueg.union_energies.end(), g.energies.begin(), g.energies.end());
  std::sort(ueg.union_energies.begin(), ueg.union_energies.end());
  ueg.union_energies.erase(std::unique(ueg.union_energies.begin(), ueg.union_energies.end()),
                           ueg.union_energies.end());

  // Sweep every nuclide alongside the union grid; each column is monotone.
  ueg.index_table.assign(ueg.union_energies.size() * ueg.n_nuclides, 0);
  for (std::size_t n = 0; n < ueg.n_nuclides; ++n) {
    const auto& e = m.nuclides[n].energies;
    std::size_t i = 0;
    for (std::size_t u = 0; u < ueg.union_energies.size(); ++u) {
      while (i + 1 < e.size() && e[i + 1] <= ueg.union_energies[u]) ++i;
      ueg.index_table[u * ueg.n_nuclides + n] = static_cast<std::uint32_t>(i);
    }
  }
  return ueg;
}

/// Per-nuclide bracket indices derived from a single union search.
inline std::vector<std::size_t> ueg_brackets(const UnionizedGrid& ueg, const Material& m, float e) {
  const std::size_t u = lower_bound(ueg.union_energies, e);
  std::vector<std::size_t> out(m.n_nuclides());
  for (std::size_t n = 0; n < m.n_nuclides(); ++n) {
    const auto& energies = m.nuclides[n].energies;
    if (!(e >= energies.front() && e <= energies.back()))
      throw Error(ErrorKind::out_of_range, "energy outside nuclide " + std::to_string(n) + " grid");
    out[n] = std::min<std::size_t>(ueg.index(u, n), energies.size() - 2);
  }
  return out;
}

inline LookupResult lookup_ueg(const UnionizedGrid& ueg, const Material& m, float e, InterpMode mode,
                               std::uint64_t rng_state) {
  const std::size_t channels = m.n_channels();
  const auto lowers = ueg_brackets(ueg, m, e);
  std::vector<float> macro(channels, 0.0f);
  std::vector<float> micro(channels);
  for (std::size_t n = 0; n < m.n_nuclides(); ++n) {
    const auto& g = m.nuclides[n];
    if (mode == InterpMode::linear) {
      micro_xs_linear(g.xs, channels, make_bracket(g.energies, lowers[n], e), micro);
      wsmc::accumulate(macro, micro, m.densities[n]);
    } else {
      const std::size_t pick = stochastic_select(g.energies, lowers[n], e, rng_state);
      wsmc::accumulate(macro, g.channels_at(pick), m.densities[n]);
    }
  }
  return {std::move(macro), rng_state};
}

struct OracleParticle {
  float energy = 0.0f;
  std::size_t start_column = 0;
};

/// Linear-mode lookups accumulated in round-robin visitation order: the start
/// column's nuclides first, then each following column with wraparound.
inline std::vector<std::vector<float>> oracle_batch(const Material& m, std::span<const OracleParticle> particles,
                                                    const std::vector<std::vector<std::size_t>>& column_order) {
  std::vector<int> seen(m.n_nuclides(), 0);
  for (const auto& col : column_order)
    for (std::size_t n : col) {
      if (n >= m.n_nuclides()) throw Error(ErrorKind::invalid_configuration, "column order names unknown nuclide");
      ++seen[n];
    }
  if (column_order.empty() || std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; }))
    throw Error(ErrorKind::invalid_configuration, "column order must list every nuclide exactly once");

  const std::size_t channels = m.n_channels();
  const std::size_t width = column_order.size();
  std::vector<std::vector<float>> out;
  out.reserve(particles.size());
  std::vector<float> micro(channels);
  for (const auto& p : particles) {
    if (p.start_column >= width) throw Error(ErrorKind::invalid_configuration, "start column outside the row");
    std::vector<float> macro(channels, 0.0f);
    for (std::size_t hop = 0; hop < width; ++hop) {
      for (std::size_t n : column_order[(p.start_column + hop) % width]) {
        const auto& g = m.nuclides[n];
        micro_xs_linear(g.xs, channels, make_bracket(g.energies, lower_bound(g.energies, p.energy), p.energy), micro);
        wsmc::accumulate(macro, micro, m.densities[n]);
      }
    }
    out.push_back(std::move(macro));
  }
  return out;
}

/// Sorts by energy (ties by id), looks each particle up with its own stream
/// mix(rng_seed, id), and returns results in input order.
inline std::vector<std::vector<float>> sorted_batch(const Material& m, std::span<const Particle> particles,
                                                    InterpMode mode, std::uint64_t rng_seed) {
  std::vector<std::size_t> order(particles.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (particles[a].energy != particles[b].energy) return particles[a].energy < particles[b].energy;
    return particles[a].id < particles[b].id;
  });
  std::vector<std::vector<float>> out(particles.size());
  for (std::size_t idx : order) {
    const auto& p = particles[idx];
    out[idx] = lookup_all_nuclides(m, p.energy, mode, mix(rng_seed, p.id)).macro_xs;
  }
  return out;
}

}  // namespace wsmc
