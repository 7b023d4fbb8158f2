#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "wsmc/patterns.hpp"
#include "wsmc/reference.hpp"

using wsmc::ErrorKind;
using wsmc::GridConfig;

namespace {

GridConfig small_config(std::size_t h, std::size_t w, std::size_t n, std::uint64_t seed = 1) {
  GridConfig c;
  c.tile_h = h;
  c.tile_w = w;
  c.particles_per_pe = n;
  c.n_nuclides = 2 * w;
  c.n_gridpoints = 400;
  c.n_channels = 3;
  c.seed = seed;
  return c;
}

wsmc::Material material_for(const GridConfig& c) {
  return wsmc::generate_material(c.seed, c.n_nuclides, c.n_gridpoints, c.n_channels);
}

template <class Fn>
ErrorKind kind_of(Fn&& fn) {
  try {
    fn();
  } catch (const wsmc::Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::state;
}

void expect_in_band(const wsmc::PeGrid& g) {
  for (const auto& pe : g.pes())
    for (std::size_t i = 0; i < pe.particles.size(); ++i)
      ASSERT_EQ(wsmc::band_of(pe.particles.energy(i), g.rows()), pe.row);
}

std::vector<std::uint64_t> all_ids(const wsmc::PeGrid& g) {
  std::vector<std::uint64_t> ids;
  for (const auto& pe : g.pes())
    for (std::size_t i = 0; i < pe.particles.size(); ++i) ids.push_back(pe.particles.id(i));
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace

// ---- column sort ----

class SortHeights : public ::testing::TestWithParam<std::size_t> {};

TEST_P(SortHeights, EveryParticleEndsInItsBand) {
  const auto c = small_config(GetParam(), 3, 10, 5);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  const auto ids = all_ids(g);
  const auto t = wsmc::column_sort(g);
  EXPECT_EQ(t.misplaced, 0u);
  EXPECT_EQ(t.supersteps, GetParam() - 1);
  EXPECT_EQ(all_ids(g), ids);
  std::size_t arrived = 0;
  for (auto a : t.arrivals_by_superstep) arrived += a;
  EXPECT_EQ(arrived, ids.size());
  expect_in_band(g);
  EXPECT_EQ(g.stage(), wsmc::GridStage::sorted);
}

INSTANTIATE_TEST_SUITE_P(Patterns, SortHeights, ::testing::Values(2, 10, 50));

TEST(ColumnSort, WorstCaseArrivesAfterLastSuperstep) {
  const std::size_t h = 10;
  const auto c = small_config(h, 1, 1);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  g.place_particle(0, 0, 0.999f, 1);
  g.place_particle(h - 1, 0, 0.001f, 2);
  const auto t = wsmc::column_sort(g);
  EXPECT_EQ(t.arrivals_by_superstep[h - 1], 2u);
  EXPECT_EQ(t.particles_moved, 2 * (h - 1));
  EXPECT_EQ(g.pe(h - 1, 0).particles.id(0), 1u);
  EXPECT_EQ(g.pe(0, 0).particles.id(0), 2u);
}

TEST(ColumnSort, SkippingTheLastSuperstepStrandsParticles) {
  const std::size_t h = 6;
  const auto c = small_config(h, 1, 1);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  g.place_particle(0, 0, 0.999f, 1);
  g.place_particle(2, 0, 0.5f, 2);
  const auto t = wsmc::column_sort(g, {true});
  EXPECT_EQ(t.supersteps, h - 2);
  EXPECT_EQ(t.misplaced, 1u);
}

TEST(ColumnSort, SingleRowNeedsNoExchange) {
  const auto c = small_config(1, 4, 5);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  const auto t = wsmc::column_sort(g);
  EXPECT_EQ(t.supersteps, 0u);
  EXPECT_EQ(t.arrivals_by_superstep.at(0), 20u);
  EXPECT_EQ(g.mesh().supersteps(), 0u);
}

TEST(ColumnSort, ThreeRowExample) {
  const auto c = small_config(3, 1, 3);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  // Bottom PE holds one particle per band; middle holds two for the top.
  g.place_particle(0, 0, 0.9f, 10);
  g.place_particle(0, 0, 0.1f, 11);
  g.place_particle(0, 0, 0.5f, 12);
  g.place_particle(1, 0, 0.7f, 13);
  g.place_particle(1, 0, 0.8f, 14);
  const auto t = wsmc::column_sort(g);
  EXPECT_EQ(t.supersteps, 2u);
  EXPECT_EQ(t.arrivals_by_superstep, (std::vector<std::size_t>{1, 3, 1}));
  EXPECT_EQ(g.loads(), (std::vector<std::size_t>{1, 1, 3}));
  expect_in_band(g);
}

TEST(ColumnSort, OutOfRangeEnergyRejected) {
  const auto c = small_config(3, 1, 1);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  g.place_particle(1, 0, 1.5f, 0);
  EXPECT_EQ(kind_of([&] { wsmc::column_sort(g); }), ErrorKind::out_of_range);
}

TEST(ColumnSort, OverflowingAPeIsReported) {
  auto c = small_config(2, 1, 2);
  const auto m = material_for(c);
  c.memory_budget_bytes = 1 << 20;
  const auto layout = wsmc::build_layout(c, m);
  c.memory_budget_bytes = *std::max_element(layout->static_bytes.begin(), layout->static_bytes.end()) +
                          layout->buffer_reserve;
  auto g = wsmc::build_grid(c, m);
  // Everything is in the top band; the bottom PE's overflow lands upstairs.
  for (int k = 0; k < 3; ++k) g.place_particle(1, 0, 0.9f, k);
  for (int k = 3; k < 6; ++k) g.place_particle(0, 0, 0.9f, k);
  EXPECT_EQ(kind_of([&] { wsmc::column_sort(g); }), ErrorKind::invalid_configuration);
}

TEST(Stages, OrderIsEnforced) {
  const auto c = small_config(2, 2, 2);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  EXPECT_EQ(kind_of([&] { wsmc::column_sort(g); }), ErrorKind::state);
  wsmc::init_particles(g);
  EXPECT_EQ(kind_of([&] { wsmc::diffuse(g, 1); }), ErrorKind::state);
  EXPECT_EQ(kind_of([&] { wsmc::round_robin(g); }), ErrorKind::state);
  EXPECT_EQ(kind_of([&] { wsmc::row_reduce(g); }), ErrorKind::state);
}

// ---- initialization ----

TEST(Init, IdealDistributionSortsIntoPerfectBalance) {
  const auto c = [] {
    auto k = small_config(8, 4, 6);
    k.distribution = wsmc::Distribution::ideal;
    return k;
  }();
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  const auto t = wsmc::column_sort(g);
  EXPECT_GT(t.particles_moved, 0u);
  EXPECT_EQ(g.max_load(), 6u);
  EXPECT_DOUBLE_EQ(g.peak_load(), 1.0);
  const auto ids = all_ids(g);
  EXPECT_EQ(ids.size(), 8u * 4 * 6);
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
}

TEST(Init, RandomDrawsUseThePerPeStream) {
  const auto c = small_config(2, 3, 4, 9);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  const auto& pe = g.pe(1, 2);
  wsmc::Lcg rng(wsmc::mix(9, 5));
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(pe.particles.energy(k), wsmc::detail::unit_float(rng.next()));
    EXPECT_EQ(pe.particles.id(k), 5u * 4 + k);
  }
}

// ---- diffusion ----

TEST(Diffuse, TwoPeExample) {
  const auto c = small_config(1, 2, 1);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  for (int k = 0; k < 19; ++k) g.place_particle(0, 0, 0.5f, k);
  for (int k = 19; k < 22; ++k) g.place_particle(0, 1, 0.5f, k);
  wsmc::column_sort(g);
  const auto t = wsmc::diffuse(g, 1);
  EXPECT_EQ(g.loads(), (std::vector<std::size_t>{11, 11}));
  EXPECT_EQ(t.particles_moved, 10u);
  // Tail of PE 0 moved right and follows PE 1's kept head.
  EXPECT_EQ(g.pe(0, 1).particles.id(2), 10u);
}

TEST(Diffuse, MaxLoadNeverRisesAndRowsKeepTheirParticles) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto c = small_config(3, 8, 12, seed);
    const auto m = material_for(c);
    auto g = wsmc::build_grid(c, m);
    wsmc::init_particles(g);
    wsmc::column_sort(g);
    const auto ids = all_ids(g);
    std::vector<std::size_t> rows(3, 0);
    for (std::size_t i = 0; i < g.size(); ++i) rows[i / 8] += g.pe(i).particles.size();
    std::size_t prev = g.max_load();
    const auto t = wsmc::diffuse(g, 30);
    for (auto load : t.max_load_history) {
      ASSERT_LE(load, prev) << "seed " << seed;
      prev = load;
    }
    ASSERT_EQ(all_ids(g), ids);
    std::vector<std::size_t> after(3, 0);
    for (std::size_t i = 0; i < g.size(); ++i) after[i / 8] += g.pe(i).particles.size();
    ASSERT_EQ(after, rows);
    expect_in_band(g);
  }
}

TEST(Diffuse, FlattensRandomImbalance) {
  auto c = small_config(10, 25, 30, 3);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  wsmc::column_sort(g);
  const double before = g.peak_load();
  wsmc::diffuse(g, 100);
  EXPECT_GT(before, 1.35);
  EXPECT_LE(g.peak_load(), 1.35);
}

// ---- round robin ----

class RoundRobinWidths : public ::testing::TestWithParam<std::size_t> {};

TEST_P(RoundRobinWidths, MatchesVisitationOrderOracleBitwise) {
  const std::size_t w = GetParam();
  const auto c = small_config(4, w, 5, 21);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  wsmc::column_sort(g);
  wsmc::diffuse(g, 3);
  std::map<std::uint64_t, wsmc::OracleParticle> start;
  for (const auto& pe : g.pes())
    for (std::size_t i = 0; i < pe.particles.size(); ++i)
      start[pe.particles.id(i)] = {pe.particles.energy(i), pe.col};
  const auto t = wsmc::round_robin(g);
  EXPECT_EQ(t.supersteps, w - 1);

  std::vector<std::vector<std::size_t>> order;
  for (std::size_t col = 0; col < w; ++col) order.push_back(g.layout().column_nuclides(col));
  std::vector<wsmc::OracleParticle> batch;
  for (const auto& [id, p] : start) batch.push_back(p);
  const auto expect = wsmc::oracle_batch(m, batch, order);

  const auto got = wsmc::collect_particles(g);
  ASSERT_EQ(got.size(), batch.size());
  std::size_t k = 0;
  for (const auto& [id, p] : start) {
    ASSERT_EQ(got[k].id, id);
    for (std::size_t r = 0; r < c.n_channels; ++r)
      ASSERT_EQ(std::bit_cast<std::uint32_t>(got[k].macro_xs[r]), std::bit_cast<std::uint32_t>(expect[k][r]));
    ++k;
  }
  for (const auto& pe : g.pes()) {
    for (std::size_t i = 0; i < pe.particles.size(); ++i) {
      EXPECT_EQ(pe.particles.visits(i), w);
      // w-1 hops right from the start column.
      EXPECT_EQ(pe.col, (start[pe.particles.id(i)].start_column + w - 1) % w);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Patterns, RoundRobinWidths, ::testing::Values(1, 3, 7));

TEST(RoundRobin, ComputeChargeMatchesWork) {
  auto c = small_config(1, 4, 3);
  c.mode = wsmc::InterpMode::stochastic;
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  for (std::size_t col = 0; col < 4; ++col)
    for (int k = 0; k < 3; ++k) g.place_particle(0, col, 0.25f * col + 0.1f, col * 3 + k);
  wsmc::column_sort(g);
  wsmc::round_robin(g);
  // Balanced: 3 particles x 2 nuclides x 4 columns at 250 cycles.
  for (const auto& pe : g.pes()) EXPECT_EQ(pe.cycles[wsmc::CycleStage::compute], 3u * 2 * 4 * 250);
  const auto r = wsmc::finalize_report(g);
  EXPECT_EQ(r.ideal_compute_cycles, 3u * 2 * 4 * 250);
  EXPECT_EQ(r.total_lookups, 12u);
}

// ---- row reduce ----

TEST(RowReduce, SingleColumnEqualsRoundRobin) {
  const auto c = small_config(3, 1, 6, 4);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  wsmc::column_sort(g);
  auto copy = g;
  const auto rr = wsmc::row_reduce(copy);
  wsmc::round_robin(g);
  EXPECT_EQ(rr.results, wsmc::collect_particles(g));
}

TEST(RowReduce, AgreesWithOracleAndComputesBeforeCommunicating) {
  const auto c = small_config(4, 4, 5, 8);
  const auto m = material_for(c);
  auto g = wsmc::build_grid(c, m);
  wsmc::init_particles(g);
  wsmc::column_sort(g);
  const auto held = all_ids(g);
  const auto rr = wsmc::row_reduce(g);
  EXPECT_EQ(all_ids(g), held);
  ASSERT_EQ(rr.results.size(), held.size());
  ASSERT_EQ(rr.traces.size(), 3u);
  EXPECT_EQ(rr.traces[0].stage, "broadcast");
  EXPECT_EQ(rr.traces[0].max_compute_cycles, 0u);
  EXPECT_GT(rr.traces[1].max_compute_cycles, 0u);
  EXPECT_EQ(rr.traces[2].max_compute_cycles, 0u);
  for (const auto& p : rr.results) {
    const auto expect = wsmc::lookup_all_nuclides(m, p.energy, wsmc::InterpMode::linear, 0).macro_xs;
    for (std::size_t r = 0; r < c.n_channels; ++r)
      EXPECT_NEAR(p.macro_xs[r], expect[r], 1e-6 * std::abs(expect[r]));
  }
}

// ---- whole pipeline ----

TEST(Pipeline, ThreadCountDoesNotChangeResults) {
  auto c = small_config(6, 5, 8, 13);
  c.mode = wsmc::InterpMode::stochastic;
  c.diffusion_iters = 10;
  c.tiles_x = 2;
  const auto m = material_for(c);
  const auto one = wsmc::run_pipeline(c, m);
  c.threads = 8;
  const auto many = wsmc::run_pipeline(c, m);
  EXPECT_EQ(one.report, many.report);
  EXPECT_EQ(one.particle_hash, many.particle_hash);
}

TEST(Pipeline, CostOnlyReportMatchesFullRun) {
  for (auto dist : {wsmc::Distribution::random, wsmc::Distribution::ideal}) {
    auto c = small_config(5, 4, 7, 2);
    c.distribution = dist;
    c.diffusion_iters = 5;
    const auto m = material_for(c);
    const auto full = wsmc::run_pipeline(c, m);
    c.evaluate_xs = false;
    EXPECT_EQ(wsmc::run_pipeline(c, m).report, full.report);
  }
}

TEST(Pipeline, TilesAreIndependentReplicas) {
  auto c = small_config(4, 3, 5, 6);
  const auto m = material_for(c);
  const auto one = wsmc::run_pipeline(c, m, {}, {true, {}});
  c.tiles_y = 2;
  c.tiles_x = 2;
  const auto four = wsmc::run_pipeline(c, m, {}, {true, {}});
  EXPECT_EQ(four.report.total_lookups, 4 * one.report.total_lookups);
  EXPECT_EQ(four.report.total_pes, 4 * one.report.total_pes);
  ASSERT_EQ(four.report.tiles.size(), 4u);
  std::uint64_t worst = 0;
  for (const auto& t : four.report.tiles) {
    EXPECT_EQ(t.particles, 4u * 3 * 5);
    worst = std::max(worst, t.max_cycles);
  }
  EXPECT_EQ(four.report.max_cycles, worst);
  // Ids are global, so no particle is duplicated across tiles.
  std::vector<std::uint64_t> ids;
  for (const auto& p : four.particles) ids.push_back(p.id);
  std::sort(ids.begin(), ids.end());
  EXPECT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
  EXPECT_EQ(ids.size(), 4u * 4 * 3 * 5);
}

TEST(Pipeline, IdealRunIsBalancedAndComputeDominated) {
  auto c = small_config(6, 4, 10, 3);
  c.distribution = wsmc::Distribution::ideal;
  const auto r = wsmc::run_pipeline(c, material_for(c)).report;
  EXPECT_DOUBLE_EQ(r.peak_load_before, 1.0);
  EXPECT_EQ(r.breakdown.compute, r.ideal_compute_cycles);
  ASSERT_TRUE(r.overhead_vs_ideal_compute.has_value());
  EXPECT_GT(*r.overhead_vs_ideal_compute, 0.0);
}
