#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"

#ifndef WSMC_GIT_VERSION
#define WSMC_GIT_VERSION "unknown"
#endif

namespace wsmc::cli {

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string num(std::uint64_t v) { return std::to_string(v); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::io, "cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error(ErrorKind::io, "write to '" + path + "' failed");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Check pass(std::string name, std::string detail) { return {std::move(name), true, std::move(detail)}; }
Check fail(std::string name, std::string detail) { return {std::move(name), false, std::move(detail)}; }

GridConfig linear_copy(GridConfig config) {
  config.mode = InterpMode::linear;
  config.evaluate_xs = true;
  return config;
}

std::vector<std::size_t> row_maxima(const PeGrid& grid) {
  std::vector<std::size_t> out(grid.rows(), 0);
  const auto loads = grid.loads();
  for (std::size_t i = 0; i < loads.size(); ++i) out[i / grid.cols()] = std::max(out[i / grid.cols()], loads[i]);
  return out;
}

std::vector<std::size_t> row_sums(const PeGrid& grid) {
  std::vector<std::size_t> out(grid.rows(), 0);
  const auto loads = grid.loads();
  for (std::size_t i = 0; i < loads.size(); ++i) out[i / grid.cols()] += loads[i];
  return out;
}

/// Index of the first held particle outside its PE's band, or nullopt.
std::optional<std::string> first_misplaced(const PeGrid& grid) {
  for (const auto& pe : grid.pes()) {
    const auto band = energy_band(pe.row, grid.rows());
    for (std::size_t i = 0; i < pe.particles.size(); ++i)
      if (!band.contains(pe.particles.energy(i)))
        return "particle " + std::to_string(pe.particles.id(i)) + " with energy " + num(pe.particles.energy(i)) +
               " held by row " + std::to_string(pe.row);
  }
  return std::nullopt;
}

template <class Fn>
void for_each_tile(const GridConfig& config, const Material& material, const CycleModel& model, Fn&& fn) {
  const auto layout = build_layout(config, material);
  for (std::size_t ty = 0; ty < config.tiles_y; ++ty)
    for (std::size_t tx = 0; tx < config.tiles_x; ++tx) {
      PeGrid grid(config, model, layout, ty, tx);
      fn(grid);
    }
}

}  // namespace

std::string version_string() { return std::string("wsmc 0.1.0+") + WSMC_GIT_VERSION; }

int exit_code_for(const Error& e) noexcept {
  switch (e.kind()) {
    case ErrorKind::invalid_configuration:
    case ErrorKind::out_of_range:
    case ErrorKind::degenerate_bracket: return kExitConfig;
    case ErrorKind::io:
    case ErrorKind::format: return kExitIo;
    case ErrorKind::protocol:
    case ErrorKind::state: return kExitCheckFailed;
  }
  return kExitCheckFailed;
}

KeyValues describe_config(const GridConfig& c) {
  return {{"tile-h", num(std::uint64_t{c.tile_h})},
          {"tile-w", num(std::uint64_t{c.tile_w})},
          {"tiles-y", num(std::uint64_t{c.tiles_y})},
          {"tiles-x", num(std::uint64_t{c.tiles_x})},
          {"particles-per-pe", num(std::uint64_t{c.particles_per_pe})},
          {"nuclides", num(std::uint64_t{c.n_nuclides})},
          {"gridpoints", num(std::uint64_t{c.n_gridpoints})},
          {"channels", num(std::uint64_t{c.n_channels})},
          {"seed", num(c.seed)},
          {"mode", std::string(to_string(c.mode))},
          {"distribution", std::string(to_string(c.distribution))},
          {"diffusion-iters", num(std::uint64_t{c.diffusion_iters})},
          {"memory-budget", num(std::uint64_t{c.memory_budget_bytes})},
          {"sort-full-records", c.sort_full_records ? "true" : "false"},
          {"cost-only", c.evaluate_xs ? "false" : "true"}};
}

Manifest make_manifest(std::string command, const GridConfig& config, KeyValues extra) {
  Manifest m{std::move(command), describe_config(config), version_string(), utc_timestamp()};
  m.config.insert(m.config.end(), extra.begin(), extra.end());
  return m;
}

std::string render_manifest(const Manifest& m) {
  std::string out = "# command=" + m.command + "\n# version=" + m.version + "\n# timestamp=" + m.timestamp + "\n";
  for (const auto& [k, v] : m.config) out += "# " + k + "=" + v + "\n";
  return out;
}

// ---- verify ----

Check check_oracle(const GridConfig& base, const Material& material, const CycleModel& model) {
  const GridConfig config = linear_copy(base);
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  std::size_t bad_visits = 0;
  std::string first;
  for_each_tile(config, material, model, [&](PeGrid& grid) {
    init_particles(grid);
    column_sort(grid);
    if (config.diffusion_iters > 0) diffuse(grid, config.diffusion_iters);
    std::map<std::uint64_t, OracleParticle> start;
    for (const auto& pe : grid.pes())
      for (std::size_t i = 0; i < pe.particles.size(); ++i)
        start[pe.particles.id(i)] = {pe.particles.energy(i), pe.col};
    round_robin(grid);

    std::vector<std::vector<std::size_t>> order(grid.cols());
    for (std::size_t c = 0; c < grid.cols(); ++c) order[c] = grid.layout().column_nuclides(c);
    std::vector<OracleParticle> batch;
    std::vector<const float*> got;
    for (const auto& pe : grid.pes())
      for (std::size_t i = 0; i < pe.particles.size(); ++i) {
        batch.push_back(start.at(pe.particles.id(i)));
        got.push_back(pe.particles.xs(i).data());
        if (pe.particles.visits(i) != grid.cols()) ++bad_visits;
      }
    const auto expected = oracle_batch(material, batch, order);
    for (std::size_t p = 0; p < batch.size(); ++p) {
      ++compared;
      for (std::size_t r = 0; r < config.n_channels; ++r)
        if (std::bit_cast<std::uint32_t>(expected[p][r]) != std::bit_cast<std::uint32_t>(got[p][r])) {
          if (mismatches == 0) first = "energy " + num(batch[p].energy) + " channel " + std::to_string(r);
          ++mismatches;
          break;
        }
    }
  });
  const std::string detail = std::to_string(compared) + " particles, " + std::to_string(mismatches) +
                             " mismatches, " + std::to_string(bad_visits) + " incomplete visits" +
                             (first.empty() ? "" : " (first: " + first + ")");
  return mismatches == 0 && bad_visits == 0 && compared > 0 ? pass("oracle_bitwise", detail)
                                                            : fail("oracle_bitwise", detail);
}

Check check_sort(const GridConfig& config, const Material& material, const CycleModel& model, bool corrupt) {
  std::size_t particles = 0;
  std::size_t misplaced = 0;
  std::optional<std::string> example;
  bool conserved = true;
  for_each_tile(config, material, model, [&](PeGrid& grid) {
    init_particles(grid);
    const std::size_t before = grid.total_particles();
    const auto trace = column_sort(grid, {corrupt});
    conserved = conserved && grid.total_particles() == before;
    particles += before;
    misplaced += trace.misplaced;
    if (!example) example = first_misplaced(grid);
  });

  // Worst case: the top band's particle starting on row 0.
  const std::size_t h = config.tile_h;
  GridConfig probe = config;
  probe.tiles_y = probe.tiles_x = 1;
  PeGrid grid(probe, model, build_layout(probe, material));
  const auto top = energy_band(h - 1, h);
  grid.place_particle(0, 0, std::nextafter(top.e_hi, 0.0f), 0);
  const auto trace = column_sort(grid, {corrupt});
  const bool worst_ok = trace.arrivals_by_superstep.back() == 1 && trace.misplaced == 0;

  std::string detail = std::to_string(particles) + " particles, " + std::to_string(misplaced) +
                       " misplaced after " + std::to_string(corrupt && h > 1 ? h - 2 : h - 1) +
                       " supersteps; worst case " + (worst_ok ? "arrives at superstep " + std::to_string(h - 1)
                                                              : std::string("does not arrive on time"));
  if (example) detail += " (e.g. " + *example + ")";
  if (!conserved) detail += "; particle count changed";
  return misplaced == 0 && !example && worst_ok && conserved ? pass("sort_completeness", detail)
                                                             : fail("sort_completeness", detail);
}

Check check_diffusion(const GridConfig& config, const Material& material, const CycleModel& model,
                      std::size_t iterations) {
  std::size_t violations = 0;
  bool conserved = true;
  bool in_band = true;
  std::size_t peak_before = 0;
  std::size_t peak_after = 0;
  for_each_tile(config, material, model, [&](PeGrid& grid) {
    init_particles(grid);
    column_sort(grid);
    auto maxima = row_maxima(grid);
    const auto sums = row_sums(grid);
    peak_before = std::max(peak_before, *std::max_element(maxima.begin(), maxima.end()));
    for (std::size_t k = 0; k < iterations; ++k) {
      diffuse(grid, 1);
      const auto next = row_maxima(grid);
      for (std::size_t r = 0; r < next.size(); ++r)
        if (next[r] > maxima[r]) ++violations;
      maxima = next;
      conserved = conserved && row_sums(grid) == sums;
    }
    in_band = in_band && !first_misplaced(grid);
    peak_after = std::max(peak_after, *std::max_element(maxima.begin(), maxima.end()));
  });
  const std::string detail = std::to_string(iterations) + " iterations, max load " + std::to_string(peak_before) +
                             " -> " + std::to_string(peak_after) + ", " + std::to_string(violations) +
                             " increases" + (conserved ? "" : ", row totals changed") +
                             (in_band ? "" : ", particle left its band");
  return violations == 0 && conserved && in_band ? pass("diffusion_monotone", detail)
                                                 : fail("diffusion_monotone", detail);
}

Check check_ueg(const Material& material, std::uint64_t seed, std::size_t energies) {
  const auto ueg = build_ueg(material);
  Lcg rng(mix(seed, 0x5545470000000000ULL));
  std::size_t index_mismatch = 0;
  std::size_t value_mismatch = 0;
  for (std::size_t k = 0; k < energies; ++k) {
    const float e = detail::unit_float(rng.next());
    const auto brackets = ueg_brackets(ueg, material, e);
    for (std::size_t n = 0; n < material.n_nuclides(); ++n)
      if (brackets[n] != lower_bound(material.nuclides[n].energies, e)) ++index_mismatch;
    const auto a = lookup_ueg(ueg, material, e, InterpMode::linear, 0).macro_xs;
    const auto b = lookup_all_nuclides(material, e, InterpMode::linear, 0).macro_xs;
    for (std::size_t r = 0; r < a.size(); ++r)
      if (std::bit_cast<std::uint32_t>(a[r]) != std::bit_cast<std::uint32_t>(b[r])) {
        ++value_mismatch;
        break;
      }
  }
  const std::string detail = std::to_string(energies) + " energies over " + std::to_string(material.n_nuclides()) +
                             " nuclides, union size " + std::to_string(ueg.size()) + ", " +
                             std::to_string(index_mismatch) + " index and " + std::to_string(value_mismatch) +
                             " value mismatches";
  return index_mismatch == 0 && value_mismatch == 0 ? pass("ueg_exact", detail) : fail("ueg_exact", detail);
}

Check check_stochastic(const Material& material, std::uint64_t seed, std::size_t brackets, std::size_t samples) {
  Lcg pick(mix(seed, 0x5354434800000000ULL));
  std::uint64_t state = mix(seed, 0x5354434801000000ULL);
  std::size_t failures = 0;
  double worst = 0.0;
  for (std::size_t b = 0; b < brackets; ++b) {
    const auto& g = material.nuclides[pick.below(material.n_nuclides())];
    const std::size_t lower = pick.below(g.n_gridpoints() - 1);
    const float e_low = g.energies[lower];
    const float e_high = g.energies[lower + 1];
    const float e = e_low + 0.5f * (e_high - e_low);
    const auto bracket = make_bracket(g.energies, lower, e);
    const float expected = micro_xs_linear(g.xs, g.n_channels, bracket)[0];

    std::size_t high = 0;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      const std::size_t idx = stochastic_select(g.energies, lower, e, state);
      if (idx == lower + 1) ++high;
      const double v = g.channels_at(idx)[0];
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(samples);
    const double mean = sum / n;
    const double sd = std::sqrt(std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)));
    const double p = 1.0 - static_cast<double>(bracket.f);
    const double freq = static_cast<double>(high) / n;
    const double binom = std::sqrt(p * (1.0 - p) / n);
    const double mean_z = sd > 0.0 ? std::abs(mean - expected) / (sd / std::sqrt(n)) : (mean == expected ? 0.0 : 1e9);
    const double freq_z = binom > 0.0 ? std::abs(freq - p) / binom : (freq == p ? 0.0 : 1e9);
    worst = std::max({worst, mean_z, freq_z});
    if (mean_z > 3.0 || freq_z > 3.0) ++failures;
  }
  const std::string detail = std::to_string(brackets) + " brackets x " + std::to_string(samples) +
                             " draws, worst deviation " + num(worst) + " sigma, " + std::to_string(failures) +
                             " outside 3 sigma";
  return failures == 0 ? pass("stochastic_mean", detail) : fail("stochastic_mean", detail);
}

Check check_row_reduce(const GridConfig& base, const Material& material, const CycleModel& model) {
  const GridConfig config = linear_copy(base);
  std::size_t compared = 0;
  std::size_t mismatches = 0;
  double worst = 0.0;
  for_each_tile(config, material, model, [&](PeGrid& grid) {
    init_particles(grid);
    column_sort(grid);
    PeGrid twin = grid;
    round_robin(grid);
    const auto rr = collect_particles(grid);
    const auto reduced = row_reduce(twin).results;
    if (rr.size() != reduced.size()) {
      mismatches += std::max(rr.size(), reduced.size());
      return;
    }
    for (std::size_t i = 0; i < rr.size(); ++i) {
      ++compared;
      bool ok = rr[i].id == reduced[i].id;
      for (std::size_t r = 0; ok && r < rr[i].macro_xs.size(); ++r) {
        const double a = rr[i].macro_xs[r];
        const double b = reduced[i].macro_xs[r];
        const double scale = std::max(std::abs(a), std::abs(b));
        const double rel = scale > 0.0 ? std::abs(a - b) / scale : 0.0;
        worst = std::max(worst, rel);
        ok = rel <= 1e-6;
      }
      if (!ok) ++mismatches;
    }
  });
  const std::string detail = std::to_string(compared) + " particles, worst relative difference " + num(worst) +
                             ", " + std::to_string(mismatches) + " beyond 1e-6";
  return mismatches == 0 && compared > 0 ? pass("row_reduce_equivalence", detail)
                                         : fail("row_reduce_equivalence", detail);
}

std::vector<Check> run_verify(const GridConfig& config, const Material& material, const CycleModel& model,
                              const VerifyOptions& options) {
  const std::size_t iters = config.diffusion_iters > 0 ? config.diffusion_iters : options.diffusion_iters;
  return {check_oracle(config, material, model),
          check_sort(config, material, model, options.corrupt_sort),
          check_diffusion(config, material, model, iters),
          check_ueg(material, config.seed, options.ueg_energies),
          check_stochastic(material, config.seed, options.brackets, options.samples),
          check_row_reduce(config, material, model)};
}

// ---- scaling sweeps ----

std::string_view to_string(Axis a) noexcept { return a == Axis::row ? "row" : "column"; }

Axis parse_axis(std::string_view s) {
  if (s == "row") return Axis::row;
  if (s == "column") return Axis::column;
  throw Error(ErrorKind::invalid_configuration, "unknown axis '" + std::string(s) + "'");
}

std::uint64_t measured_cycles(Axis axis, const PipelineResult& result) {
  if (axis == Axis::column) return result.report.max_cycles;
  for (const auto& t : result.traces)
    if (t.stage == "roundrobin") return t.max_stage_cycles;
  throw Error(ErrorKind::state, "pipeline produced no round-robin trace");
}

GridConfig weak_config(Axis axis, std::size_t width, std::size_t n, const GridConfig& base) {
  GridConfig c = base;
  c.tiles_x = c.tiles_y = 1;
  c.particles_per_pe = n;
  c.diffusion_iters = 0;
  if (axis == Axis::row) {
    c.tile_h = 1;
    c.tile_w = width;
    c.n_nuclides = width;
  } else {
    c.tile_h = width;
    c.tile_w = 1;
    c.n_nuclides = 1;
  }
  c.validate();
  return c;
}

std::vector<WeakPoint> weak_sweep(Axis axis, const std::vector<std::size_t>& n_list,
                                  const std::vector<std::size_t>& widths, const GridConfig& base,
                                  const CycleModel& model) {
  if (widths.empty() || n_list.empty()) throw Error(ErrorKind::invalid_configuration, "empty sweep");
  auto measure = [&](std::size_t width, std::size_t n) {
    const GridConfig c = weak_config(axis, width, n, base);
    const auto cycles = measured_cycles(axis, run_pipeline(c, model));
    const double units = static_cast<double>(n) * static_cast<double>(axis == Axis::row ? width : 1);
    return std::pair{cycles, static_cast<double>(cycles) / units};
  };
  std::vector<WeakPoint> out;
  for (std::size_t n : n_list) {
    if (n == 0) throw Error(ErrorKind::invalid_configuration, "particle counts must be positive");
    const double baseline = measure(1, n).second;
    for (std::size_t w : widths) {
      if (w == 0) throw Error(ErrorKind::invalid_configuration, "widths must be at least 1");
      const auto [cycles, per_unit] = measure(w, n);
      out.push_back({axis, w, n, cycles, per_unit, baseline / per_unit});
    }
  }
  return out;
}

std::string weak_csv(const std::vector<WeakPoint>& points) {
  std::string out = "axis,width,n,cycles,cycles_per_pe_per_particle,efficiency_vs_width1\n";
  for (const auto& p : points)
    out += std::string(to_string(p.axis)) + "," + num(std::uint64_t{p.width}) + "," + num(std::uint64_t{p.n}) + "," +
           num(p.cycles) + "," + num(p.cycles_per_unit) + "," + num(p.efficiency) + "\n";
  return out;
}

StrongProblem default_strong_problem(Axis axis) noexcept {
  if (axis == Axis::column) return {100, 1, 800, 5};
  return {250, 250, 10, 1};
}

GridConfig strong_config(Axis axis, std::size_t width, const StrongProblem& problem, const GridConfig& base) {
  if (width == 0) throw Error(ErrorKind::invalid_configuration, "widths must be at least 1");
  if (problem.particles % width != 0)
    throw Error(ErrorKind::invalid_configuration, std::to_string(problem.particles) +
                                                      " particles do not divide evenly across width " +
                                                      std::to_string(width));
  GridConfig c = base;
  c.tiles_x = c.tiles_y = 1;
  c.diffusion_iters = 0;
  c.particles_per_pe = problem.particles / width;
  c.n_nuclides = problem.nuclides;
  c.n_gridpoints = problem.gridpoints;
  c.n_channels = problem.channels;
  c.tile_h = axis == Axis::column ? width : 1;
  c.tile_w = axis == Axis::column ? 1 : width;
  c.validate();
  return c;
}

StrongSweep strong_sweep(Axis axis, const std::vector<std::size_t>& widths, const StrongProblem& problem,
                         const GridConfig& base, const CycleModel& model) {
  if (widths.empty()) throw Error(ErrorKind::invalid_configuration, "empty sweep");
  std::vector<GridConfig> configs;
  for (std::size_t w : widths) configs.push_back(strong_config(axis, w, problem, base));
  const auto material = generate_material(base.seed, problem.nuclides, problem.gridpoints, problem.channels);

  StrongSweep sweep;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const auto cycles = measured_cycles(axis, run_pipeline(configs[i], material, model));
    sweep.points.push_back({axis, widths[i], configs[i].particles_per_pe, cycles, 0.0});
  }
  const double first = static_cast<double>(sweep.points.front().cycles);
  for (auto& p : sweep.points) p.speedup = first / static_cast<double>(p.cycles);
  const auto best = std::min_element(sweep.points.begin(), sweep.points.end(),
                                     [](const auto& a, const auto& b) { return a.cycles < b.cycles; });
  sweep.best_width = best->width;
  sweep.turnover = best != sweep.points.begin() && best + 1 != sweep.points.end();
  return sweep;
}

std::string strong_csv(const StrongSweep& sweep) {
  std::string out = "axis,width,particles_per_pe,cycles,speedup_vs_first,is_minimum\n";
  for (const auto& p : sweep.points)
    out += std::string(to_string(p.axis)) + "," + num(std::uint64_t{p.width}) + "," +
           num(std::uint64_t{p.particles_per_pe}) + "," + num(p.cycles) + "," + num(p.speedup) + "," +
           (p.width == sweep.best_width ? "1" : "0") + "\n";
  return out;
}

// ---- fullsim ----

std::vector<RegimeRun> fullsim(const GridConfig& config, const Material& material, const CycleModel& model,
                               std::size_t balance_iters) {
  std::vector<RegimeRun> runs;
  auto add = [&](std::string name, Distribution d, std::size_t iters) {
    GridConfig c = config;
    c.distribution = d;
    c.diffusion_iters = iters;
    runs.push_back({std::move(name), c, run_pipeline(c, material, model)});
  };
  add("ideal", Distribution::ideal, 0);
  add("random", Distribution::random, 0);
  add("random+diffusion", Distribution::random, balance_iters);
  return runs;
}

std::string fullsim_csv(const std::vector<RegimeRun>& runs) {
  std::string out =
      "regime,tile_h,tile_w,tiles_y,tiles_x,total_pes,particles_per_pe,mode,diffusion_iters,fom_lookups_per_s,"
      "peak_load_before,peak_load_after,max_cycles,sort_cycles,diffuse_cycles,roundrobin_cycles,compute_cycles,"
      "ideal_compute_cycles,overhead_vs_ideal_compute\n";
  for (const auto& run : runs) {
    const auto& c = run.config;
    const auto& r = run.result.report;
    out += run.regime + "," + num(std::uint64_t{c.tile_h}) + "," + num(std::uint64_t{c.tile_w}) + "," +
           num(std::uint64_t{c.tiles_y}) + "," + num(std::uint64_t{c.tiles_x}) + "," +
           num(std::uint64_t{r.total_pes}) + "," + num(std::uint64_t{c.particles_per_pe}) + "," +
           std::string(to_string(c.mode)) + "," + num(std::uint64_t{c.diffusion_iters}) + "," +
           num(r.fom_lookups_per_s) + "," + num(r.peak_load_before) + "," + num(r.peak_load_after) + "," +
           num(r.max_cycles) + "," + num(r.breakdown.sort) + "," + num(r.breakdown.diffuse) + "," +
           num(r.breakdown.roundrobin) + "," + num(r.breakdown.compute) + "," + num(r.ideal_compute_cycles) + "," +
           (r.overhead_vs_ideal_compute ? num(*r.overhead_vs_ideal_compute) : std::string()) + "\n";
  }
  return out;
}

std::string trace_csv(const std::vector<RegimeRun>& runs) {
  std::string out =
      "regime,stage,tile_y,tile_x,supersteps,particles_moved,max_stage_cycles,max_compute_cycles,misplaced\n";
  for (const auto& run : runs)
    for (const auto& t : run.result.traces)
      out += run.regime + "," + t.stage + "," + num(std::uint64_t{t.tile_y}) + "," + num(std::uint64_t{t.tile_x}) +
             "," + num(std::uint64_t{t.supersteps}) + "," + num(std::uint64_t{t.particles_moved}) + "," +
             num(t.max_stage_cycles) + "," + num(t.max_compute_cycles) + "," + num(std::uint64_t{t.misplaced}) +
             "\n";
  return out;
}

std::string fullsim_summary(const std::vector<RegimeRun>& runs) {
  std::ostringstream s;
  for (const auto& run : runs) {
    const auto& r = run.result.report;
    s << run.regime << ": FOM " << num(r.fom_lookups_per_s) << " lookups/s, " << r.max_cycles << " cycles, peak load "
      << num(r.peak_load_before) << " -> " << num(r.peak_load_after) << ", " << r.total_lookups << " lookups on "
      << r.total_pes << " PEs\n";
  }
  return s.str();
}

// ---- entry point ----

namespace {

std::vector<std::size_t> parse_list(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size())
      throw Error(ErrorKind::invalid_configuration, std::string("bad ") + what + " entry '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw Error(ErrorKind::invalid_configuration, std::string("empty ") + what);
  return out;
}

struct CommonArgs {
  GridConfig config;
  std::string mode = "linear";
  std::string distribution = "random";
  bool cost_only = false;
  std::string out;
  std::string material;
};

Material obtain_material(const CommonArgs& args) {
  if (args.material.empty())
    return generate_material(args.config.seed, args.config.n_nuclides, args.config.n_gridpoints,
                             args.config.n_channels);
  auto loaded = load_material(args.material);
  if (loaded.material.n_nuclides() != args.config.n_nuclides ||
      loaded.material.n_gridpoints() != args.config.n_gridpoints ||
      loaded.material.n_channels() != args.config.n_channels)
    throw Error(ErrorKind::invalid_configuration, "cached material shape does not match --nuclides/--gridpoints/--channels");
  return std::move(loaded.material);
}

void emit(const CommonArgs& args, std::ostream& out, const std::string& text) {
  if (args.out.empty())
    out << text;
  else
    write_text(args.out, text);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decomposed cross-section lookup simulator for a 2D PE mesh", "wsmc"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file (keys are long flag names); flags override");
  app.set_version_flag("--version", version_string());

  CommonArgs args;
  GridConfig& c = args.config;
  app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app.add_option("--tile-h", c.tile_h, "Tile height (energy bands)")->capture_default_str();
  app.add_option("--tile-w", c.tile_w, "Tile width (nuclide groups)")->capture_default_str();
  app.add_option("--tiles-y", c.tiles_y, "Tile replicas vertically")->capture_default_str();
  app.add_option("--tiles-x", c.tiles_x, "Tile replicas horizontally")->capture_default_str();
  app.add_option("--nuclides", c.n_nuclides, "Nuclides in the material")->capture_default_str();
  app.add_option("--gridpoints", c.n_gridpoints, "Energy gridpoints per nuclide")->capture_default_str();
  app.add_option("--channels", c.n_channels, "Reaction channels")->capture_default_str();
  app.add_option("--particles-per-pe", c.particles_per_pe, "Starting particles per PE")->capture_default_str();
  app.add_option("--mode", args.mode, "Interpolation mode")
      ->check(CLI::IsMember({"linear", "stochastic"}))
      ->capture_default_str();
  app.add_option("--distribution", args.distribution, "Particle distribution")
      ->check(CLI::IsMember({"ideal", "random"}))
      ->capture_default_str();
  app.add_option("--diffusion-iters", c.diffusion_iters, "Diffusion load-balancing iterations")
      ->capture_default_str();
  app.add_option("--memory-budget", c.memory_budget_bytes, "Bytes of memory per PE")->capture_default_str();
  app.add_flag("--sort-full-records", c.sort_full_records, "Sort messages carry full particle records");
  app.add_flag("--cost-only", args.cost_only, "Skip floating-point lookups; cycle accounting is unchanged");
  app.add_option("--threads", c.threads, "Worker threads (results do not depend on it)")->capture_default_str();
  app.add_option("--out", args.out, "Output CSV path (stdout when omitted)");
  app.add_option("--material", args.material, "Load the material from a WMCX cache instead of generating it");

  auto* verify = app.add_subcommand("verify", "Run the oracle and property checks")->fallthrough();
  VerifyOptions vopts;
  verify->add_flag("--corrupt-sort", vopts.corrupt_sort, "Test hook: skip the final sort superstep");
  verify->add_option("--samples", vopts.samples, "Draws per bracket for the stochastic check")->capture_default_str();

  auto* weak = app.add_subcommand("weak", "Weak-scaling sweep along one axis")->fallthrough();
  std::string weak_axis = "row";
  std::string n_list = "1,10,100";
  std::string width_list;
  weak->add_option("--axis", weak_axis)->check(CLI::IsMember({"row", "column"}))->capture_default_str();
  weak->add_option("--n-list", n_list, "Particles per PE, comma separated")->capture_default_str();
  weak->add_option("--width-list", width_list, "Widths, comma separated");

  auto* strong = app.add_subcommand("strong", "Strong-scaling sweep along one axis")->fallthrough();
  std::string strong_axis = "column";
  std::string strong_widths;
  std::size_t total_particles = 0;
  strong->add_option("--axis", strong_axis)->check(CLI::IsMember({"row", "column"}))->capture_default_str();
  strong->add_option("--width-list", strong_widths, "Widths, comma separated");
  strong->add_option("--total-particles", total_particles, "Global particle count (axis default when omitted)");

  auto* full = app.add_subcommand("fullsim", "Ideal, random and balanced regimes on the configured tiling")
                   ->fallthrough();
  std::string trace_out;
  full->add_option("--trace-out", trace_out, "Per-stage trace CSV path");

  auto* gen = app.add_subcommand("gen", "Write or inspect a WMCX material cache")->fallthrough();
  std::string load_path;
  gen->add_option("--load", load_path, "Read and summarize an existing cache instead of writing one");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    c.mode = parse_interp_mode(args.mode);
    c.distribution = parse_distribution(args.distribution);
    c.evaluate_xs = !args.cost_only;
    const CycleModel model{};

    if (*verify) {
      c.validate();
      const auto material = obtain_material(args);
      const auto checks = run_verify(c, material, model, vopts);
      bool all = true;
      for (const auto& check : checks) {
        out << (check.passed ? "PASS " : "FAIL ") << check.name << ": " << check.detail << "\n";
        all = all && check.passed;
      }
      if (!all) {
        for (const auto& check : checks)
          if (!check.passed) err << "check failed: " << check.name << "\n";
        return kExitCheckFailed;
      }
      return kExitOk;
    }

    if (*weak) {
      const Axis axis = parse_axis(weak_axis);
      if (width_list.empty()) width_list = axis == Axis::row ? "1,2,5,10,25,50,125,250" : "1,2,5,10,20,50,100";
      const auto points = weak_sweep(axis, parse_list(n_list, "n list"), parse_list(width_list, "width list"), c, model);
      const auto manifest =
          make_manifest("weak", c, {{"axis", weak_axis}, {"n-list", n_list}, {"width-list", width_list}});
      emit(args, out, render_manifest(manifest) + weak_csv(points));
      return kExitOk;
    }

    if (*strong) {
      const Axis axis = parse_axis(strong_axis);
      StrongProblem problem = default_strong_problem(axis);
      if (total_particles > 0) problem.particles = total_particles;
      if (app.count("--nuclides") > 0) problem.nuclides = c.n_nuclides;
      if (app.count("--gridpoints") > 0) problem.gridpoints = c.n_gridpoints;
      if (app.count("--channels") > 0) problem.channels = c.n_channels;
      if (strong_widths.empty())
        strong_widths = axis == Axis::column ? "1,2,4,5,10,20,25,50,100" : "1,2,5,10,25,50,125,250";
      const auto sweep = strong_sweep(axis, parse_list(strong_widths, "width list"), problem, c, model);
      const auto manifest = make_manifest(
          "strong", c,
          {{"axis", strong_axis},
           {"width-list", strong_widths},
           {"problem", num(std::uint64_t{problem.particles}) + " particles, " + num(std::uint64_t{problem.nuclides}) +
                           " nuclides, " + num(std::uint64_t{problem.gridpoints}) + " points, " +
                           num(std::uint64_t{problem.channels}) + " channels"}});
      emit(args, out, render_manifest(manifest) + strong_csv(sweep));
      err << "minimum at width " << sweep.best_width
          << (sweep.turnover ? " (cycles fall then rise)" : " (no turnover inside the sweep)") << "\n";
      return kExitOk;
    }

    if (*full) {
      c.validate();
      const std::size_t balance = app.count("--diffusion-iters") > 0 ? c.diffusion_iters : 100;
      const auto material = obtain_material(args);
      const auto runs = fullsim(c, material, model, balance);
      const auto manifest = make_manifest("fullsim", c, {{"balance-iters", num(std::uint64_t{balance})}});
      emit(args, out, render_manifest(manifest) + fullsim_csv(runs));
      if (!trace_out.empty()) write_text(trace_out, render_manifest(manifest) + trace_csv(runs));
      (args.out.empty() ? err : out) << fullsim_summary(runs);
      return kExitOk;
    }

    if (*gen) {
      if (!load_path.empty()) {
        const auto loaded = load_material(load_path);
        out << "seed " << loaded.seed << ": " << loaded.material.n_nuclides() << " nuclides, "
            << loaded.material.n_gridpoints() << " gridpoints, " << loaded.material.n_channels() << " channels, "
            << loaded.material.payload_bytes() << " payload bytes\n";
        return kExitOk;
      }
      if (args.out.empty()) throw Error(ErrorKind::invalid_configuration, "gen needs --out or --load");
      if (c.n_nuclides < 1 || c.n_gridpoints < 2 || c.n_channels < 1)
        throw Error(ErrorKind::invalid_configuration, "material dimensions are too small");
      const auto material = generate_material(c.seed, c.n_nuclides, c.n_gridpoints, c.n_channels);
      save_material(args.out, material, c.seed);
      out << "wrote " << wmcx_file_size(c.n_nuclides, c.n_gridpoints, c.n_channels) << " bytes to " << args.out
          << "\n";
      return kExitOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::bad_alloc&) {
    err << "error: out of host memory\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace wsmc::cli
