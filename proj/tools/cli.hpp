#pragma once

// Command-line harness: verification suite, scaling sweeps, full-tile
// experiments and material caching. Each command is also callable directly.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wsmc/wsmc.hpp"

namespace wsmc::cli {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitIo = 3 };

std::string version_string();

/// Maps an error to the documented exit code.
int exit_code_for(const Error& e) noexcept;

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Config in the same key=value form accepted by --config.
KeyValues describe_config(const GridConfig& config);

struct Manifest {
  std::string command;
  KeyValues config;
  std::string version;
  std::string timestamp;
};

Manifest make_manifest(std::string command, const GridConfig& config, KeyValues extra = {});
/// '#'-prefixed header; the timestamp is the only line that varies between runs.
std::string render_manifest(const Manifest& m);

// ---- verify ----

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyOptions {
  bool corrupt_sort = false;
  std::size_t samples = 100000;      // draws per bracket for the stochastic check
  std::size_t brackets = 20;
  std::size_t ueg_energies = 10000;
  std::size_t diffusion_iters = 16;  // used when the config asks for none
};

Check check_oracle(const GridConfig& config, const Material& material, const CycleModel& model);
Check check_sort(const GridConfig& config, const Material& material, const CycleModel& model, bool corrupt);
Check check_diffusion(const GridConfig& config, const Material& material, const CycleModel& model,
                      std::size_t iterations);
Check check_ueg(const Material& material, std::uint64_t seed, std::size_t energies);
Check check_stochastic(const Material& material, std::uint64_t seed, std::size_t brackets, std::size_t samples);
Check check_row_reduce(const GridConfig& config, const Material& material, const CycleModel& model);

std::vector<Check> run_verify(const GridConfig& config, const Material& material, const CycleModel& model,
                              const VerifyOptions& options);

// ---- scaling sweeps ----

enum class Axis { row, column };
std::string_view to_string(Axis a) noexcept;
Axis parse_axis(std::string_view s);

/// Column axis: whole-pipeline critical path. Row axis: the round-robin stage
/// alone, which is the kernel the row studies characterize.
std::uint64_t measured_cycles(Axis axis, const PipelineResult& result);

struct WeakPoint {
  Axis axis = Axis::row;
  std::size_t width = 0;
  std::size_t n = 0;
  std::uint64_t cycles = 0;
  // Row axis: per particle per nuclide. Column axis: per particle.
  double cycles_per_unit = 0.0;
  double efficiency = 0.0;
};

/// Row axis: one band, `width` columns, one nuclide per PE. Column axis:
/// `width` bands, one column, one nuclide. Gridpoints and channels come from base.
GridConfig weak_config(Axis axis, std::size_t width, std::size_t n, const GridConfig& base);
std::vector<WeakPoint> weak_sweep(Axis axis, const std::vector<std::size_t>& n_list,
                                  const std::vector<std::size_t>& widths, const GridConfig& base,
                                  const CycleModel& model);
std::string weak_csv(const std::vector<WeakPoint>& points);

struct StrongProblem {
  std::size_t particles = 0;
  std::size_t nuclides = 0;
  std::size_t gridpoints = 0;
  std::size_t channels = 0;
};

StrongProblem default_strong_problem(Axis axis) noexcept;

struct StrongPoint {
  Axis axis = Axis::row;
  std::size_t width = 0;
  std::size_t particles_per_pe = 0;
  std::uint64_t cycles = 0;
  double speedup = 0.0;  // relative to the first width in the sweep
};

struct StrongSweep {
  std::vector<StrongPoint> points;
  std::size_t best_width = 0;
  // Cycles fall and then rise again inside the sweep.
  bool turnover = false;
};

/// Throws invalid_configuration when the problem does not divide across `width`.
GridConfig strong_config(Axis axis, std::size_t width, const StrongProblem& problem, const GridConfig& base);
StrongSweep strong_sweep(Axis axis, const std::vector<std::size_t>& widths, const StrongProblem& problem,
                         const GridConfig& base, const CycleModel& model);
std::string strong_csv(const StrongSweep& sweep);

// ---- fullsim ----

struct RegimeRun {
  std::string regime;  // ideal, random, random+diffusion
  GridConfig config;
  PipelineResult result;
};

std::vector<RegimeRun> fullsim(const GridConfig& config, const Material& material, const CycleModel& model,
                               std::size_t balance_iters);
std::string fullsim_csv(const std::vector<RegimeRun>& runs);
std::string trace_csv(const std::vector<RegimeRun>& runs);
std::string fullsim_summary(const std::vector<RegimeRun>& runs);

// ---- entry point ----

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wsmc::cli
