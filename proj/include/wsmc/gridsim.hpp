#pragma once

// Tile layout, per-PE state, the analytic cycle-cost model and run reports.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wsmc/error.hpp"
#include "wsmc/kernel.hpp"
#include "wsmc/mesh.hpp"
#include "wsmc/particles.hpp"
#include "wsmc/rng.hpp"
#include "wsmc/xsdata.hpp"

namespace wsmc {

enum class Distribution { ideal, random };

inline std::string_view to_string(Distribution d) noexcept { return d == Distribution::ideal ? "ideal" : "random"; }

inline Distribution parse_distribution(std::string_view s) {
  if (s == "ideal") return Distribution::ideal;
  if (s == "random") return Distribution::random;
  throw Error(ErrorKind::invalid_configuration, "unknown distribution '" + std::string(s) + "'");
}

struct GridConfig {
  std::size_t tile_h = 10;
  std::size_t tile_w = 10;
  std::size_t tiles_y = 1;
  std::size_t tiles_x = 1;
  std::size_t particles_per_pe = 10;
  std::size_t n_nuclides = 20;
  std::size_t n_gridpoints = 1000;
  std::size_t n_channels = 5;
  std::uint64_t seed = 1;
  InterpMode mode = InterpMode::linear;
  Distribution distribution = Distribution::random;
  std::size_t diffusion_iters = 0;
  std::size_t memory_budget_bytes = kDefaultMemoryBudget;
  // Sort messages carry full particle records instead of energy + id.
  bool sort_full_records = false;
  // When false the pipeline moves particles and charges cycles but skips the
  // floating-point lookups (cycle accounting is unchanged).
  bool evaluate_xs = true;
  std::size_t threads = 1;

  std::size_t nuclides_per_column() const noexcept { return n_nuclides / tile_w; }
  std::size_t pes_per_tile() const noexcept { return tile_h * tile_w; }
  std::size_t tile_count() const noexcept { return tiles_y * tiles_x; }
  std::size_t total_pes() const noexcept { return pes_per_tile() * tile_count(); }

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_configuration, msg); };
    if (tile_h < 1 || tile_w < 1) fail("tile dimensions must be at least 1x1");
    if (tiles_y < 1 || tiles_x < 1) fail("tiling counts must be at least 1");
    if (n_nuclides < 1) fail("at least one nuclide is required");
    if (n_nuclides % tile_w != 0)
      fail("nuclide count " + std::to_string(n_nuclides) + " is not divisible by tile width " +
           std::to_string(tile_w));
    if (n_gridpoints < 2) fail("at least 2 gridpoints per nuclide are required");
    if (n_channels < 1) fail("at least one reaction channel is required");
    if (threads < 1) fail("thread count must be at least 1");
  }
};

/// Calibrated cost constants, in cycles unless noted.
struct CycleModel {
  std::uint64_t c_lookup_linear = 463;      // per particle per nuclide
  std::uint64_t c_lookup_stochastic = 250;  // per particle per nuclide
  std::uint64_t c_hop_word = 1;             // per 32-bit word per router hop
  std::uint64_t c_ramp = 7;                 // processor <-> router, per message
  std::uint64_t c_div_fp32 = 50;            // informational only
  double clock_hz = 850e6;
  // Task activation and length handshake paid by a PE once per
  // communication iteration.
  std::uint64_t c_exchange_overhead = 200;
  // Examining and buffering one particle during the column sort.
  std::uint64_t c_sort_scan = 20;
  // Optional a + b*log2(points) lookup form; b = 0 keeps the cost constant.
  double c_lookup_per_probe = 0.0;
  double reference_points = 161.0;

  std::uint64_t base_lookup(InterpMode mode) const noexcept {
    return mode == InterpMode::linear ? c_lookup_linear : c_lookup_stochastic;
  }

  std::uint64_t lookup_cycles(InterpMode mode, std::size_t points) const noexcept {
    const auto base = static_cast<double>(base_lookup(mode));
    if (c_lookup_per_probe == 0.0 || points < 2) return base_lookup(mode);
    const double c = base + c_lookup_per_probe * (std::log2(static_cast<double>(points)) - std::log2(reference_points));
    return c <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(c));
  }

  void validate() const {
    if (!(clock_hz > 0.0)) throw Error(ErrorKind::invalid_configuration, "clock rate must be positive");
    if (c_lookup_per_probe < 0.0 || !(reference_points >= 2.0))
      throw Error(ErrorKind::invalid_configuration, "lookup probe model must be non-negative");
  }
};

/// Ramp down at the sender, n_words across n_hops links, ramp up at the receiver.
constexpr std::uint64_t charge_message(const CycleModel& m, std::uint64_t n_words, std::uint64_t n_hops) noexcept {
  return 2 * m.c_ramp + n_words * m.c_hop_word * n_hops;
}

inline std::size_t record_words(std::size_t n_channels) noexcept { return 1 + n_channels; }

enum class CycleStage : std::size_t { sort = 0, diffuse = 1, exchange = 2, compute = 3 };

/// Per-PE clock. Only the owning PE mutates it; waiting on a message moves
/// the clock forward to the message's ready time.
struct PeCycles {
  std::uint64_t total = 0;
  std::array<std::uint64_t, 4> by_stage{};

  void charge(CycleStage s, std::uint64_t c) noexcept {
    total += c;
    by_stage[static_cast<std::size_t>(s)] += c;
  }
  void wait_until(CycleStage s, std::uint64_t t) noexcept {
    if (t > total) charge(s, t - total);
  }
  std::uint64_t operator[](CycleStage s) const noexcept { return by_stage[static_cast<std::size_t>(s)]; }
};

struct PeState {
  std::size_t row = 0;
  std::size_t col = 0;
  ParticleBuffer particles;
  std::uint64_t rng_state = 0;
  PeCycles cycles;
  std::size_t scratch_bytes = 0;  // stage-local buffers outside `particles`
};

/// What travels over a link in one superstep.
struct Packet {
  ParticleBuffer particles;
  std::vector<float> values;
  std::uint64_t ready_at = 0;
};

/// Immutable per-tile decomposition shared by every tile replica.
struct TileLayout {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t nuclides_per_column = 0;
  std::size_t n_channels = 0;
  std::vector<std::vector<GridSlice>> slices;  // per PE, row-major
  std::vector<float> densities;                // per nuclide
  std::vector<std::size_t> static_bytes;       // per PE, slices only
  std::size_t buffer_reserve = 0;

  std::span<const GridSlice> pe_slices(std::size_t pe) const noexcept { return slices[pe]; }
  std::vector<std::size_t> column_nuclides(std::size_t col) const {
    std::vector<std::size_t> out(nuclides_per_column);
    for (std::size_t k = 0; k < nuclides_per_column; ++k) out[k] = col * nuclides_per_column + k;
    return out;
  }
};

/// Rows are energy bands, columns own consecutive nuclide groups. Throws
/// invalid_configuration when any PE exceeds the memory budget.
inline std::shared_ptr<const TileLayout> build_layout(const GridConfig& config, const Material& material) {
  config.validate();
  validate(material);
  if (material.n_nuclides() != config.n_nuclides || material.n_channels() != config.n_channels)
    throw Error(ErrorKind::invalid_configuration, "material shape does not match the grid configuration");

  auto layout = std::make_shared<TileLayout>();
  layout->rows = config.tile_h;
  layout->cols = config.tile_w;
  layout->nuclides_per_column = config.nuclides_per_column();
  layout->n_channels = config.n_channels;
  layout->densities = material.densities;
  layout->buffer_reserve = 2 * config.particles_per_pe * record_words(config.n_channels) * kBytesPerValue;
  layout->slices.resize(config.pes_per_tile());
  layout->static_bytes.resize(config.pes_per_tile());
  for (std::size_t r = 0; r < config.tile_h; ++r) {
    const auto band = energy_band(r, config.tile_h);
    for (std::size_t c = 0; c < config.tile_w; ++c) {
      const std::size_t pe = r * config.tile_w + c;
      for (std::size_t n : layout->column_nuclides(c))
        layout->slices[pe].push_back(slice_for_band(material.nuclides[n], n, band));
      layout->static_bytes[pe] = footprint_bytes(layout->slices[pe], 0);
      const std::size_t total = layout->static_bytes[pe] + layout->buffer_reserve;
      if (total > config.memory_budget_bytes)
        throw Error(ErrorKind::invalid_configuration,
                    "PE (" + std::to_string(r) + "," + std::to_string(c) + ") needs " + std::to_string(total) +
                        " bytes, budget is " + std::to_string(config.memory_budget_bytes));
    }
  }
  return layout;
}

enum class GridStage { built, initialized, sorted, balanced, accumulated };

/// One tile replica: its PEs, mailboxes and clocks over a shared layout.
class PeGrid {
 public:
  PeGrid(GridConfig config, CycleModel model, std::shared_ptr<const TileLayout> layout, std::size_t tile_y = 0,
         std::size_t tile_x = 0)
      : config_(std::move(config)),
        model_(model),
        layout_(std::move(layout)),
        tile_y_(tile_y),
        tile_x_(tile_x),
        mesh_(config_.tile_h, config_.tile_w),
        pes_(config_.pes_per_tile()) {
    model_.validate();
    if (tile_y_ >= config_.tiles_y || tile_x_ >= config_.tiles_x)
      throw Error(ErrorKind::invalid_configuration, "tile coordinates outside the tiling");
    for (std::size_t i = 0; i < pes_.size(); ++i) {
      pes_[i].row = i / config_.tile_w;
      pes_[i].col = i % config_.tile_w;
      pes_[i].particles = ParticleBuffer(config_.n_channels);
      pes_[i].rng_state = mix(config_.seed, kInterpStreamBase + global_pe_index(pes_[i].row, pes_[i].col));
    }
  }

  const GridConfig& config() const noexcept { return config_; }
  const CycleModel& model() const noexcept { return model_; }
  const TileLayout& layout() const noexcept { return *layout_; }
  const std::shared_ptr<const TileLayout>& shared_layout() const noexcept { return layout_; }
  std::size_t tile_y() const noexcept { return tile_y_; }
  std::size_t tile_x() const noexcept { return tile_x_; }
  std::size_t tile_index() const noexcept { return tile_y_ * config_.tiles_x + tile_x_; }
  std::size_t rows() const noexcept { return config_.tile_h; }
  std::size_t cols() const noexcept { return config_.tile_w; }
  std::size_t size() const noexcept { return pes_.size(); }

  PeState& pe(std::size_t index) noexcept { return pes_[index]; }
  const PeState& pe(std::size_t index) const noexcept { return pes_[index]; }
  PeState& pe(std::size_t row, std::size_t col) noexcept { return pes_[row * cols() + col]; }
  const PeState& pe(std::size_t row, std::size_t col) const noexcept { return pes_[row * cols() + col]; }
  std::vector<PeState>& pes() noexcept { return pes_; }
  const std::vector<PeState>& pes() const noexcept { return pes_; }

  MeshExchange<Packet>& mesh() noexcept { return mesh_; }
  const MeshExchange<Packet>& mesh() const noexcept { return mesh_; }

  /// Row-major index over the whole machine grid (all tiles).
  std::size_t global_pe_index(std::size_t row, std::size_t col) const noexcept {
    const std::size_t gy = tile_y_ * config_.tile_h + row;
    const std::size_t gx = tile_x_ * config_.tile_w + col;
    return gy * (config_.tiles_x * config_.tile_w) + gx;
  }

  GridStage stage() const noexcept { return stage_; }
  void set_stage(GridStage s) noexcept { stage_ = s; }

  /// Test and tooling hook: drop a particle onto a PE before sorting.
  void place_particle(std::size_t row, std::size_t col, float energy, std::uint64_t id) {
    pe(row, col).particles.push_back(energy, id);
    if (stage_ == GridStage::built) stage_ = GridStage::initialized;
  }

  std::size_t pending_particles(std::size_t pe_index) const noexcept {
    std::size_t n = 0;
    for (Direction d : kAllDirections)
      for (const auto& p : mesh_.inbox(pe_index, d)) n += p.particles.size();
    return n;
  }

  /// Held plus in-flight particles per PE, row-major.
  std::vector<std::size_t> loads() const {
    std::vector<std::size_t> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = pes_[i].particles.size() + pending_particles(i);
    return out;
  }

  std::size_t total_particles() const {
    std::size_t n = 0;
    for (auto l : loads()) n += l;
    return n;
  }

  std::size_t max_load() const {
    const auto l = loads();
    return l.empty() ? 0 : *std::max_element(l.begin(), l.end());
  }

  /// Maximum PE load divided by the mean; 1 for an empty tile.
  double peak_load() const {
    const auto total = total_particles();
    if (total == 0) return 1.0;
    return static_cast<double>(max_load()) * static_cast<double>(size()) / static_cast<double>(total);
  }

  std::size_t footprint(std::size_t pe_index) const {
    std::size_t inflight = 0;
    for (Direction d : kAllDirections)
      for (const auto& p : mesh_.inbox(pe_index, d)) inflight += p.values.size();
    const std::size_t words = (pes_[pe_index].particles.size() + pending_particles(pe_index)) *
                                  record_words(config_.n_channels) +
                              inflight;
    return layout_->static_bytes[pe_index] + words * kBytesPerValue + pes_[pe_index].scratch_bytes;
  }

  /// Throws invalid_configuration naming the first PE over budget.
  void check_memory() const {
    for (std::size_t i = 0; i < size(); ++i) {
      const auto bytes = footprint(i);
      if (bytes > config_.memory_budget_bytes)
        throw Error(ErrorKind::invalid_configuration, "PE " + mesh_.describe(i) + " of tile (" +
                                                          std::to_string(tile_y_) + "," + std::to_string(tile_x_) +
                                                          ") holds " + std::to_string(bytes) +
                                                          " bytes, budget is " +
                                                          std::to_string(config_.memory_budget_bytes));
    }
  }

  void record_load_before() { max_load_before_ = max_load(); }
  void record_load_after() { max_load_after_ = max_load(); }
  std::optional<std::size_t> max_load_before() const noexcept { return max_load_before_; }
  std::optional<std::size_t> max_load_after() const noexcept { return max_load_after_; }

 private:
  GridConfig config_;
  CycleModel model_;
  std::shared_ptr<const TileLayout> layout_;
  std::size_t tile_y_ = 0;
  std::size_t tile_x_ = 0;
  MeshExchange<Packet> mesh_;
  std::vector<PeState> pes_;
  GridStage stage_ = GridStage::built;
  std::optional<std::size_t> max_load_before_;
  std::optional<std::size_t> max_load_after_;
};

inline PeGrid build_grid(const GridConfig& config, const Material& material, const CycleModel& model = {}) {
  return PeGrid(config, model, build_layout(config, material));
}

struct StageBreakdown {
  std::uint64_t sort = 0;
  std::uint64_t diffuse = 0;
  std::uint64_t roundrobin = 0;
  std::uint64_t compute = 0;

  friend bool operator==(const StageBreakdown&, const StageBreakdown&) = default;
};

struct TileSummary {
  std::size_t tile_y = 0;
  std::size_t tile_x = 0;
  std::uint64_t max_cycles = 0;
  std::size_t max_load_before = 0;
  std::size_t max_load_after = 0;
  std::size_t particles = 0;
  double peak_load_before = 1.0;
  double peak_load_after = 1.0;

  friend bool operator==(const TileSummary&, const TileSummary&) = default;
};

struct SimReport {
  std::uint64_t max_cycles = 0;
  StageBreakdown breakdown;  // of the PE that set max_cycles
  std::size_t total_pes = 0;
  std::uint64_t total_lookups = 0;  // one lookup = one particle over all nuclides
  std::size_t max_load_before = 0;
  std::size_t max_load_after = 0;
  double peak_load_before = 1.0;
  double peak_load_after = 1.0;
  double clock_hz = 0.0;
  double fom_lookups_per_s = 0.0;
  std::uint64_t ideal_compute_cycles = 0;
  std::optional<double> overhead_vs_ideal_compute;
  std::vector<TileSummary> tiles;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

namespace detail {

inline double peak_ratio(std::size_t max_load, std::size_t total, std::size_t pes) {
  if (total == 0) return 1.0;
  return static_cast<double>(max_load) * static_cast<double>(pes) / static_cast<double>(total);
}

inline void derive_rates(SimReport& r) {
  r.peak_load_before = peak_ratio(r.max_load_before, r.total_lookups, r.total_pes);
  r.peak_load_after = peak_ratio(r.max_load_after, r.total_lookups, r.total_pes);
  r.fom_lookups_per_s = (r.total_lookups == 0 || r.max_cycles == 0)
                            ? 0.0
                            : static_cast<double>(r.total_lookups) / (static_cast<double>(r.max_cycles) / r.clock_hz);
  if (r.total_lookups == 0 || r.ideal_compute_cycles == 0)
    r.overhead_vs_ideal_compute.reset();
  else
    r.overhead_vs_ideal_compute =
        static_cast<double>(r.max_cycles) / static_cast<double>(r.ideal_compute_cycles) - 1.0;
}

}  // namespace detail

/// Lookup-only cycles for one PE that never waits and always holds n particles.
inline std::uint64_t ideal_compute_cycles(const GridConfig& config, const CycleModel& model) {
  return model.base_lookup(config.mode) * config.nuclides_per_column() * config.tile_w * config.particles_per_pe;
}

inline SimReport finalize_report(const PeGrid& grid) {
  if (grid.stage() != GridStage::accumulated)
    throw Error(ErrorKind::state, "report requested before the round-robin stage completed");
  SimReport r;
  r.clock_hz = grid.model().clock_hz;
  r.total_pes = grid.size();
  r.total_lookups = grid.total_particles();
  r.ideal_compute_cycles = ideal_compute_cycles(grid.config(), grid.model());
  const PeState* critical = &grid.pe(0);
  for (const auto& pe : grid.pes())
    if (pe.cycles.total > critical->cycles.total) critical = &pe;
  r.max_cycles = critical->cycles.total;
  r.breakdown = {critical->cycles[CycleStage::sort], critical->cycles[CycleStage::diffuse],
                 critical->cycles[CycleStage::exchange], critical->cycles[CycleStage::compute]};
  r.max_load_before = grid.max_load_before().value_or(grid.max_load());
  r.max_load_after = grid.max_load_after().value_or(r.max_load_before);
  detail::derive_rates(r);
  r.tiles.push_back({grid.tile_y(), grid.tile_x(), r.max_cycles, r.max_load_before, r.max_load_after,
                     static_cast<std::size_t>(r.total_lookups), r.peak_load_before, r.peak_load_after});
  return r;
}

/// Combines independent tile reports into one machine-level report.
inline SimReport merge_reports(const std::vector<SimReport>& parts) {
  if (parts.empty()) throw Error(ErrorKind::state, "no tile reports to merge");
  SimReport r;
  r.clock_hz = parts.front().clock_hz;
  r.ideal_compute_cycles = parts.front().ideal_compute_cycles;
  for (const auto& p : parts) {
    if (r.tiles.empty() || p.max_cycles > r.max_cycles) {
      r.max_cycles = p.max_cycles;
      r.breakdown = p.breakdown;
    }
    r.total_pes += p.total_pes;
    r.total_lookups += p.total_lookups;
    r.max_load_before = std::max(r.max_load_before, p.max_load_before);
    r.max_load_after = std::max(r.max_load_after, p.max_load_after);
    r.tiles.insert(r.tiles.end(), p.tiles.begin(), p.tiles.end());
  }
  detail::derive_rates(r);
  return r;
}

}  // namespace wsmc
