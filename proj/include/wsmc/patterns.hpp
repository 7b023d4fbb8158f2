#pragma once

// The decomposed lookup pipeline: particle initialization, column energy
// sort, one-directional diffusion load balancing, round-robin nuclide
// accumulation and the row-reduce alternative.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "wsmc/error.hpp"
#include "wsmc/gridsim.hpp"
#include "wsmc/kernel.hpp"
#include "wsmc/mesh.hpp"
#include "wsmc/particles.hpp"
#include "wsmc/rng.hpp"
#include "wsmc/xsdata.hpp"

namespace wsmc {

struct PipelineStageTrace {
  std::string stage;
  std::size_t tile_y = 0;
  std::size_t tile_x = 0;
  std::size_t supersteps = 0;
  std::size_t particles_moved = 0;
  std::uint64_t max_stage_cycles = 0;    // max over PEs of cycles spent in this stage
  std::uint64_t max_compute_cycles = 0;  // max over PEs of lookup cycles in this stage
  // column_sort only: claims per arrival superstep (index 0 = already home),
  // and particles left outside their band.
  std::vector<std::size_t> arrivals_by_superstep;
  std::size_t misplaced = 0;
  // diffuse only: tile max load after each iteration.
  std::vector<std::size_t> max_load_history;
};

namespace detail {

class StageClock {
 public:
  explicit StageClock(const PeGrid& grid) : start_(grid.size()), compute_(grid.size()) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      start_[i] = grid.pe(i).cycles.total;
      compute_[i] = grid.pe(i).cycles[CycleStage::compute];
    }
  }
  void finish(const PeGrid& grid, PipelineStageTrace& trace) const {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      trace.max_stage_cycles = std::max(trace.max_stage_cycles, grid.pe(i).cycles.total - start_[i]);
      trace.max_compute_cycles =
          std::max(trace.max_compute_cycles, grid.pe(i).cycles[CycleStage::compute] - compute_[i]);
    }
    trace.tile_y = grid.tile_y();
    trace.tile_x = grid.tile_x();
  }

 private:
  std::vector<std::uint64_t> start_;
  std::vector<std::uint64_t> compute_;
};

inline void send_packet(PeContext<Packet>& ctx, PeState& pe, const CycleModel& model, CycleStage stage,
                        Direction to, Packet packet, std::size_t words) {
  pe.cycles.charge(stage, charge_message(model, words, 1));
  packet.ready_at = pe.cycles.total;
  ctx.send(to, std::move(packet));
}

/// Waits for and concatenates every packet that arrived from `from`.
inline ParticleBuffer receive_particles(PeContext<Packet>& ctx, PeState& pe, CycleStage stage, Direction from,
                                        std::size_t n_channels) {
  ParticleBuffer out(n_channels);
  for (auto& packet : ctx.inbox(from)) {
    pe.cycles.wait_until(stage, packet.ready_at);
    out.append(std::move(packet.particles));
  }
  return out;
}

/// Accumulates every local nuclide slice into each particle of `group`.
inline void lookup_group(const PeGrid& grid, std::size_t pe_index, PeState& pe, ParticleBuffer& group) {
  const auto& config = grid.config();
  const auto& layout = grid.layout();
  const auto slices = layout.pe_slices(pe_index);
  std::uint64_t per_particle = 0;
  for (const auto& s : slices) per_particle += grid.model().lookup_cycles(config.mode, s.n_points());
  pe.cycles.charge(CycleStage::compute, per_particle * group.size());
  if (config.evaluate_xs) {
    std::vector<float> scratch(config.n_channels);
    for (std::size_t i = 0; i < group.size(); ++i)
      for (const auto& s : slices)
        lookup_table(s.energies, s.xs, s.n_channels, layout.densities[s.nuclide_id], group.energy(i), config.mode,
                     pe.rng_state, group.xs(i), scratch);
  }
  for (std::size_t i = 0; i < group.size(); ++i) group.add_visit(i);
}

}  // namespace detail

/// Random: each PE draws n energies from its own stream. Ideal: each column
/// samples n particles inside every row's band, shuffles them, and deals n
/// to each PE, so the sort is exercised but ends perfectly balanced.
inline void init_particles(PeGrid& grid) {
  const auto& config = grid.config();
  const std::size_t n = config.particles_per_pe;
  const std::size_t h = grid.rows();
  const std::size_t w = grid.cols();
  for (auto& pe : grid.pes()) pe.particles = ParticleBuffer(config.n_channels);

  if (config.distribution == Distribution::random) {
    for (auto& pe : grid.pes()) {
      const std::size_t gid = grid.global_pe_index(pe.row, pe.col);
      Lcg rng(mix(config.seed, gid));
      for (std::size_t k = 0; k < n; ++k) pe.particles.push_back(detail::unit_float(rng.next()), gid * n + k);
    }
  } else {
    for (std::size_t c = 0; c < w; ++c) {
      Lcg rng(mix(config.seed, kColumnStreamBase + grid.tile_index() * w + c));
      std::vector<std::pair<float, std::uint64_t>> column;
      column.reserve(h * n);
      for (std::size_t r = 0; r < h; ++r) {
        const auto band = energy_band(r, h);
        const std::size_t gid = grid.global_pe_index(r, c);
        for (std::size_t k = 0; k < n; ++k) {
          auto e = static_cast<float>(static_cast<double>(band.e_lo) +
                                      rng.next() * (static_cast<double>(band.e_hi) - static_cast<double>(band.e_lo)));
          if (!band.contains(e)) e = std::nextafter(band.e_hi, 0.0f);
          column.emplace_back(e, gid * n + k);
        }
      }
      for (std::size_t i = column.size(); i > 1; --i) std::swap(column[i - 1], column[rng.below(i)]);
      for (std::size_t i = 0; i < column.size(); ++i)
        grid.pe(i / n, c).particles.push_back(column[i].first, column[i].second);
    }
  }
  grid.set_stage(GridStage::initialized);
}

struct ColumnSortOptions {
  // Fault injection: run one superstep fewer than the h-1 bound.
  bool skip_final_iteration = false;
};

/// Moves every particle to the row whose band holds its energy using h-1
/// up/down exchange supersteps, then claims the last arrivals locally.
inline PipelineStageTrace column_sort(PeGrid& grid, ColumnSortOptions options = {}) {
  if (grid.stage() == GridStage::built)
    throw Error(ErrorKind::state, "column sort requires initialized particles");
  const auto& config = grid.config();
  const auto& model = grid.model();
  const std::size_t h = grid.rows();
  const std::size_t channels = config.n_channels;
  const std::size_t wire = config.sort_full_records ? record_words(channels) : 2;
  std::size_t iterations = h - 1;
  if (options.skip_final_iteration && iterations > 0) --iterations;

  PipelineStageTrace trace;
  trace.stage = "sort";
  trace.arrivals_by_superstep.assign(h, 0);
  detail::StageClock clock(grid);
  std::vector<std::vector<std::size_t>> arrivals(grid.size(), std::vector<std::size_t>(h, 0));
  std::vector<std::size_t> moved(grid.size(), 0);
  std::vector<std::size_t> misplaced(grid.size(), 0);

  // Candidates are scanned, in-band ones claimed; the rest head up or down.
  auto gather = [&](PeContext<Packet>& ctx, PeState& pe, bool take_held) {
    ParticleBuffer candidates(channels);
    if (take_held) std::swap(candidates, pe.particles);
    candidates.append(detail::receive_particles(ctx, pe, CycleStage::sort, Direction::down, channels));
    candidates.append(detail::receive_particles(ctx, pe, CycleStage::sort, Direction::up, channels));
    pe.cycles.charge(CycleStage::sort, model.c_sort_scan * candidates.size());
    return candidates;
  };

  for (std::size_t k = 1; k <= iterations; ++k) {
    grid.mesh().superstep(
        [&](PeContext<Packet>& ctx) {
          const std::size_t idx = ctx.index();
          auto& pe = grid.pe(idx);
          ParticleBuffer candidates = gather(ctx, pe, k == 1);
          pe.cycles.charge(CycleStage::sort, model.c_exchange_overhead);
          Packet up{ParticleBuffer(channels), {}, 0};
          Packet down{ParticleBuffer(channels), {}, 0};
          for (std::size_t i = 0; i < candidates.size(); ++i) {
            const std::size_t band = band_of(candidates.energy(i), h);
            if (band == pe.row) {
              pe.particles.push_from(candidates, i);
              ++arrivals[idx][k - 1];
            } else {
              (band > pe.row ? up : down).particles.push_from(candidates, i);
            }
          }
          moved[idx] += up.particles.size() + down.particles.size();
          if (pe.row + 1 < h) {
            const std::size_t words = 1 + up.particles.size() * wire;
            detail::send_packet(ctx, pe, model, CycleStage::sort, Direction::up, std::move(up), words);
          }
          if (pe.row > 0) {
            const std::size_t words = 1 + down.particles.size() * wire;
            detail::send_packet(ctx, pe, model, CycleStage::sort, Direction::down, std::move(down), words);
          }
        },
        Topology{}, config.threads);
    grid.check_memory();
  }

  grid.mesh().local_pass(
      [&](PeContext<Packet>& ctx) {
        const std::size_t idx = ctx.index();
        auto& pe = grid.pe(idx);
        ParticleBuffer candidates = gather(ctx, pe, iterations == 0);
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          if (band_of(candidates.energy(i), h) == pe.row)
            ++arrivals[idx][iterations];
          else
            ++misplaced[idx];
          pe.particles.push_from(candidates, i);
        }
      },
      config.threads);

  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t s = 0; s < h; ++s) trace.arrivals_by_superstep[s] += arrivals[i][s];
    trace.particles_moved += moved[i];
    trace.misplaced += misplaced[i];
  }
  trace.supersteps = iterations;
  clock.finish(grid, trace);
  grid.set_stage(GridStage::sorted);
  return trace;
}

/// Each iteration every PE ships floor(count/2) particles from the tail of
/// its list to its right neighbor (periodic) and appends what arrives.
inline PipelineStageTrace diffuse(PeGrid& grid, std::size_t iterations) {
  if (grid.stage() == GridStage::built || grid.stage() == GridStage::initialized)
    throw Error(ErrorKind::state, "diffusion requires particles sorted into bands");
  const auto& config = grid.config();
  const auto& model = grid.model();
  const std::size_t channels = config.n_channels;
  const std::size_t wire = record_words(channels);
  const Topology ring{true, false};

  PipelineStageTrace trace;
  trace.stage = "diffuse";
  detail::StageClock clock(grid);
  std::vector<std::size_t> moved(grid.size(), 0);

  for (std::size_t k = 0; k < iterations; ++k) {
    grid.mesh().superstep(
        [&](PeContext<Packet>& ctx) {
          auto& pe = grid.pe(ctx.index());
          pe.particles.append(detail::receive_particles(ctx, pe, CycleStage::diffuse, Direction::left, channels));
          pe.cycles.charge(CycleStage::diffuse, model.c_exchange_overhead);
          Packet out{pe.particles.split_tail(pe.particles.size() / 2), {}, 0};
          moved[ctx.index()] += out.particles.size();
          const std::size_t words = 1 + out.particles.size() * wire;
          detail::send_packet(ctx, pe, model, CycleStage::diffuse, Direction::right, std::move(out), words);
        },
        ring, config.threads);
    grid.check_memory();
    trace.max_load_history.push_back(grid.max_load());
  }
  grid.mesh().local_pass(
      [&](PeContext<Packet>& ctx) {
        auto& pe = grid.pe(ctx.index());
        pe.particles.append(detail::receive_particles(ctx, pe, CycleStage::diffuse, Direction::left, channels));
      },
      config.threads);

  trace.supersteps = iterations;
  trace.particles_moved = std::accumulate(moved.begin(), moved.end(), std::size_t{0});
  clock.finish(grid, trace);
  grid.set_stage(GridStage::balanced);
  return trace;
}

namespace detail {

inline std::vector<std::size_t> row_totals(const PeGrid& grid) {
  std::vector<std::size_t> totals(grid.rows(), 0);
  const auto loads = grid.loads();
  for (std::size_t i = 0; i < loads.size(); ++i) totals[i / grid.cols()] += loads[i];
  return totals;
}

}  // namespace detail

/// Every PE looks up its held workgroup, then w-1 times passes the workgroup
/// right (periodic) and looks up what arrives, so each particle visits every
/// column once starting from its own.
inline PipelineStageTrace round_robin(PeGrid& grid) {
  if (grid.stage() == GridStage::built || grid.stage() == GridStage::initialized)
    throw Error(ErrorKind::state, "round robin requires particles sorted into bands");
  const auto& config = grid.config();
  const auto& model = grid.model();
  const std::size_t channels = config.n_channels;
  const std::size_t wire = record_words(channels);
  const std::size_t w = grid.cols();
  const Topology ring{true, false};
  const auto totals_before = detail::row_totals(grid);

  PipelineStageTrace trace;
  trace.stage = "roundrobin";
  detail::StageClock clock(grid);
  std::vector<std::size_t> moved(grid.size(), 0);

  auto workgroup = [&](PeContext<Packet>& ctx, PeState& pe, bool take_held) {
    if (take_held) {
      ParticleBuffer group(channels);
      std::swap(group, pe.particles);
      return group;
    }
    return detail::receive_particles(ctx, pe, CycleStage::exchange, Direction::left, channels);
  };

  for (std::size_t k = 1; k < w; ++k) {
    grid.mesh().superstep(
        [&](PeContext<Packet>& ctx) {
          auto& pe = grid.pe(ctx.index());
          ParticleBuffer group = workgroup(ctx, pe, k == 1);
          detail::lookup_group(grid, ctx.index(), pe, group);
          pe.cycles.charge(CycleStage::exchange, model.c_exchange_overhead);
          moved[ctx.index()] += group.size();
          const std::size_t words = 1 + group.size() * wire;
          detail::send_packet(ctx, pe, model, CycleStage::exchange, Direction::right, Packet{std::move(group), {}, 0},
                              words);
        },
        ring, config.threads);
    grid.check_memory();
  }
  grid.mesh().local_pass(
      [&](PeContext<Packet>& ctx) {
        auto& pe = grid.pe(ctx.index());
        ParticleBuffer group = workgroup(ctx, pe, w == 1);
        detail::lookup_group(grid, ctx.index(), pe, group);
        pe.particles = std::move(group);
      },
      config.threads);

  if (detail::row_totals(grid) != totals_before)
    throw Error(ErrorKind::protocol, "round robin lost or duplicated particles");
  trace.supersteps = w - 1;
  trace.particles_moved = std::accumulate(moved.begin(), moved.end(), std::size_t{0});
  clock.finish(grid, trace);
  grid.set_stage(GridStage::accumulated);
  return trace;
}

struct ParticleResult {
  std::uint64_t id = 0;
  float energy = 0.0f;
  std::vector<float> macro_xs;

  friend bool operator==(const ParticleResult&, const ParticleResult&) = default;
};

struct RowReduceResult {
  std::vector<ParticleResult> results;  // ordered by id
  std::vector<PipelineStageTrace> traces;  // broadcast, compute, reduce
};

/// Broadcasts each row's particles to every PE of the row, computes local
/// partial sums for all of them up front, then chains a left-to-right
/// reduction that leaves the totals on the rightmost PE. Held particles are
/// left untouched; PE clocks are charged.
inline RowReduceResult row_reduce(PeGrid& grid) {
  if (grid.stage() == GridStage::built || grid.stage() == GridStage::initialized)
    throw Error(ErrorKind::state, "row reduce requires particles sorted into bands");
  const auto& config = grid.config();
  const auto& model = grid.model();
  const std::size_t channels = config.n_channels;
  const std::size_t w = grid.cols();
  const Topology ring{true, false};
  const auto totals_before = detail::row_totals(grid);
  RowReduceResult result;

  std::vector<ParticleBuffer> gathered(grid.size());
  auto copy_of = [&](const ParticleBuffer& src) {
    ParticleBuffer out(channels);
    for (std::size_t i = 0; i < src.size(); ++i) out.push_back(src.energy(i), src.id(i));
    return out;
  };
  auto track = [&](std::size_t idx) {
    grid.pe(idx).scratch_bytes = gathered[idx].size() * record_words(channels) * kBytesPerValue;
  };

  {
    PipelineStageTrace trace;
    trace.stage = "broadcast";
    detail::StageClock clock(grid);
    std::vector<std::size_t> moved(grid.size(), 0);
    for (std::size_t k = 1; k < w; ++k) {
      grid.mesh().superstep(
          [&](PeContext<Packet>& ctx) {
            const std::size_t idx = ctx.index();
            auto& pe = grid.pe(idx);
            ParticleBuffer forward(channels);
            if (k == 1) {
              gathered[idx] = copy_of(pe.particles);
              forward = gathered[idx];
            } else {
              forward = detail::receive_particles(ctx, pe, CycleStage::exchange, Direction::left, channels);
              gathered[idx].append(forward);
            }
            track(idx);
            pe.cycles.charge(CycleStage::exchange, model.c_exchange_overhead);
            moved[idx] += forward.size();
            const std::size_t words = 1 + forward.size() * 2;
            detail::send_packet(ctx, pe, model, CycleStage::exchange, Direction::right,
                                Packet{std::move(forward), {}, 0}, words);
          },
          ring, config.threads);
      grid.check_memory();
    }
    grid.mesh().local_pass(
        [&](PeContext<Packet>& ctx) {
          const std::size_t idx = ctx.index();
          auto& pe = grid.pe(idx);
          if (w == 1)
            gathered[idx] = copy_of(pe.particles);
          else
            gathered[idx].append(detail::receive_particles(ctx, pe, CycleStage::exchange, Direction::left, channels));
          track(idx);
        },
        config.threads);
    grid.check_memory();
    trace.supersteps = w - 1;
    trace.particles_moved = std::accumulate(moved.begin(), moved.end(), std::size_t{0});
    clock.finish(grid, trace);
    result.traces.push_back(std::move(trace));
  }

  {
    PipelineStageTrace trace;
    trace.stage = "compute";
    detail::StageClock clock(grid);
    grid.mesh().local_pass(
        [&](PeContext<Packet>& ctx) {
          const std::size_t idx = ctx.index();
          auto& src = gathered[idx];
          std::vector<std::size_t> order(src.size());
          std::iota(order.begin(), order.end(), std::size_t{0});
          std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return src.id(a) < src.id(b); });
          ParticleBuffer sorted(channels);
          for (std::size_t i : order) sorted.push_from(src, i);
          detail::lookup_group(grid, idx, grid.pe(idx), sorted);
          src = std::move(sorted);
        },
        config.threads);
    clock.finish(grid, trace);
    result.traces.push_back(std::move(trace));
  }

  {
    PipelineStageTrace trace;
    trace.stage = "reduce";
    detail::StageClock clock(grid);
    std::vector<std::vector<float>> acc(grid.size());
    auto combine = [&](PeContext<Packet>& ctx, std::size_t idx, bool first_in_chain) {
      auto& pe = grid.pe(idx);
      const auto& own = gathered[idx];
      std::vector<float> sum(own.size() * channels);
      for (std::size_t i = 0; i < own.size(); ++i) std::copy_n(own.xs(i).begin(), channels, sum.begin() + i * channels);
      if (!first_in_chain) {
        for (auto& packet : ctx.inbox(Direction::left)) {
          pe.cycles.wait_until(CycleStage::exchange, packet.ready_at);
          if (packet.values.size() != sum.size())
            throw Error(ErrorKind::protocol, "row reduce partials differ in length");
          for (std::size_t j = 0; j < sum.size(); ++j) sum[j] = packet.values[j] + sum[j];
        }
      }
      return sum;
    };
    for (std::size_t k = 1; k < w; ++k) {
      grid.mesh().superstep(
          [&](PeContext<Packet>& ctx) {
            const std::size_t idx = ctx.index();
            auto& pe = grid.pe(idx);
            if (pe.col != k - 1) return;
            auto sum = combine(ctx, idx, k == 1);
            pe.cycles.charge(CycleStage::exchange, model.c_exchange_overhead);
            const std::size_t words = 1 + sum.size();
            detail::send_packet(ctx, pe, model, CycleStage::exchange, Direction::right,
                                Packet{ParticleBuffer(channels), std::move(sum), 0}, words);
          },
          ring, config.threads);
      grid.check_memory();
    }
    grid.mesh().local_pass(
        [&](PeContext<Packet>& ctx) {
          const std::size_t idx = ctx.index();
          if (grid.pe(idx).col == w - 1) acc[idx] = combine(ctx, idx, w == 1);
        },
        config.threads);
    for (std::size_t r = 0; r < grid.rows(); ++r) {
      const std::size_t idx = r * w + (w - 1);
      const auto& own = gathered[idx];
      for (std::size_t i = 0; i < own.size(); ++i)
        result.results.push_back({own.id(i), own.energy(i),
                                  std::vector<float>(acc[idx].begin() + static_cast<std::ptrdiff_t>(i * channels),
                                                     acc[idx].begin() + static_cast<std::ptrdiff_t>((i + 1) * channels))});
    }
    trace.supersteps = w - 1;
    clock.finish(grid, trace);
    result.traces.push_back(std::move(trace));
  }

  for (std::size_t i = 0; i < grid.size(); ++i) grid.pe(i).scratch_bytes = 0;
  std::size_t produced = result.results.size();
  if (produced != std::accumulate(totals_before.begin(), totals_before.end(), std::size_t{0}))
    throw Error(ErrorKind::protocol, "row reduce lost or duplicated particles");
  std::sort(result.results.begin(), result.results.end(),
            [](const ParticleResult& a, const ParticleResult& b) { return a.id < b.id; });
  return result;
}

/// Final particle states of a tile, ordered by id.
inline std::vector<ParticleResult> collect_particles(const PeGrid& grid) {
  std::vector<ParticleResult> out;
  out.reserve(grid.total_particles());
  for (const auto& pe : grid.pes()) {
    for (std::size_t i = 0; i < pe.particles.size(); ++i) {
      const auto xs = pe.particles.xs(i);
      out.push_back({pe.particles.id(i), pe.particles.energy(i), {xs.begin(), xs.end()}});
    }
  }
  std::sort(out.begin(), out.end(), [](const ParticleResult& a, const ParticleResult& b) { return a.id < b.id; });
  return out;
}

/// FNV-1a over (id, energy bits, channel bits) of id-ordered results.
inline std::uint64_t hash_particles(const std::vector<ParticleResult>& particles,
                                    std::uint64_t h = 0xcbf29ce484222325ULL) {
  auto feed = [&h](std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (v >> (8 * i)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& p : particles) {
    feed(p.id, 8);
    feed(std::bit_cast<std::uint32_t>(p.energy), 4);
    for (float x : p.macro_xs) feed(std::bit_cast<std::uint32_t>(x), 4);
  }
  return h;
}

struct PipelineResult {
  SimReport report;
  std::vector<PipelineStageTrace> traces;  // every stage of every tile
  std::vector<ParticleResult> particles;   // only when requested
  std::uint64_t particle_hash = 0;
};

struct PipelineOptions {
  bool keep_particles = false;
  ColumnSortOptions sort;
};

/// build -> init -> sort -> diffuse (skipped when diffusion_iters == 0) ->
/// round robin -> report, tile by tile. Tiles are independent, so only one
/// tile's particle state is resident at a time.
inline PipelineResult run_pipeline(const GridConfig& config, const Material& material, const CycleModel& model = {},
                                   const PipelineOptions& options = {}) {
  const auto layout = build_layout(config, material);
  PipelineResult out;
  out.particle_hash = 0xcbf29ce484222325ULL;
  std::vector<SimReport> reports;
  for (std::size_t ty = 0; ty < config.tiles_y; ++ty) {
    for (std::size_t tx = 0; tx < config.tiles_x; ++tx) {
      PeGrid grid(config, model, layout, ty, tx);
      init_particles(grid);
      out.traces.push_back(column_sort(grid, options.sort));
      grid.record_load_before();
      if (config.diffusion_iters > 0) out.traces.push_back(diffuse(grid, config.diffusion_iters));
      grid.record_load_after();
      out.traces.push_back(round_robin(grid));
      reports.push_back(finalize_report(grid));
      auto particles = collect_particles(grid);
      out.particle_hash = hash_particles(particles, out.particle_hash);
      if (options.keep_particles)
        out.particles.insert(out.particles.end(), std::make_move_iterator(particles.begin()),
                             std::make_move_iterator(particles.end()));
    }
  }
  out.report = merge_reports(reports);
  return out;
}

inline PipelineResult run_pipeline(const GridConfig& config, const CycleModel& model = {},
                                   const PipelineOptions& options = {}) {
  config.validate();
  const auto material = generate_material(config.seed, config.n_nuclides, config.n_gridpoints, config.n_channels);
  return run_pipeline(config, material, model, options);
}

}  // namespace wsmc
