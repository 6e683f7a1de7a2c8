#include <doctest.h>

#include <cmath>
#include <vector>

#include "morphouq/domain/config.hpp"
#include "morphouq/domain/grid.hpp"
#include "morphouq/model/simulation.hpp"
#include "morphouq/model/solver.hpp"
#include "morphouq/rng.hpp"

using namespace morphouq;

namespace {

RunConfig desk_config(double t_end) {
  RunConfig c;
  c.dx = 0.2;
  c.dy = 0.2;
  c.time.t_end = t_end;
  return c;
}

double l2_change(const Grid& grid, const SimulationResult& r) {
  const auto z0 = grid.initial_bed();
  double s = 0.0;
  for (std::size_t k = 0; k < z0.size(); ++k) {
    const double d = r.zb_final[k] - z0[k];
    s += d * d * grid.cell_area(k);
  }
  return std::sqrt(s);
}

/// Box with a sediment layer of `depth` over a flat floor at -depth.
Grid sediment_box(int nx, int ny, double d, double depth, bool outflow) {
  Grid g = make_box_grid(nx, ny, d, d, std::vector<double>(static_cast<std::size_t>(nx * ny), -depth),
                         outflow);
  g.erodible0.assign(g.size(), depth);
  return g;
}

}  // namespace

TEST_CASE("lake at rest on the flume bathymetry") {
  RunConfig c;
  c.geometry = "full";
  c.dx = c.dy = 0.2;
  const Grid g = grid_for(c);
  FlowState s = initial_state(g, c);
  const double level = 0.47;
  for (std::size_t k = 0; k < g.size(); ++k) {
    s.h[k] = g.active[k] ? std::max(0.0, level - s.zb[k]) : 0.0;
  }
  const FlowState s0 = s;
  Solver solver(g, c, c.params);
  for (int n = 0; n < 100; ++n) solver.step_hydro(s, 0.01);
  double worst = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    worst = std::max({worst, std::abs(s.h[k] - s0.h[k]), std::abs(s.hu[k]), std::abs(s.hv[k])});
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("uniform transport leaves the interior bed unchanged") {
  RunConfig c;
  Grid g = sediment_box(20, 5, 0.1, 0.05, false);
  FlowState s;
  s.h.assign(g.size(), 0.2);
  s.hu.assign(g.size(), 0.2 * 1.0);
  s.hv.assign(g.size(), 0.0);
  s.zb = g.initial_bed();
  const auto z0 = s.zb;
  step_exner(s, g, c.params, c, 0.01);
  bool moved = false;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (i >= 1 && i + 1 < g.nx) {
        CHECK(std::abs(s.zb[k] - z0[k]) < 1e-15);
      } else {
        moved = moved || s.zb[k] != z0[k];
      }
    }
  }
  CHECK(moved);
}

TEST_CASE("sub-critical flow moves no sediment") {
  RunConfig c;
  Grid g = sediment_box(10, 4, 0.1, 0.05, true);
  Rng rng = make_rng(1);
  FlowState s;
  s.h.assign(g.size(), 0.3);
  s.hu.resize(g.size());
  s.hv.resize(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    s.hu[k] = 0.3 * 0.01 * uniform01(rng);
    s.hv[k] = 0.3 * 0.01 * uniform01(rng);
  }
  s.zb = g.initial_bed();
  const auto z0 = s.zb;
  step_exner(s, g, c.params, c, 0.01);
  CHECK(s.zb == z0);
}

TEST_CASE("Exner step conserves sediment") {
  RunConfig c;
  Rng rng = make_rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Grid g = sediment_box(16, 6, 0.1, 0.05, true);
    for (std::size_t k = 0; k < g.size(); ++k) g.erodible0[k] = 0.02 + 0.06 * uniform01(rng);
    FlowState s;
    s.h.resize(g.size());
    s.hu.resize(g.size());
    s.hv.resize(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      s.h[k] = 0.05 + 0.2 * uniform01(rng);
      s.hu[k] = s.h[k] * (0.5 + 1.5 * uniform01(rng));
      s.hv[k] = s.h[k] * (uniform01(rng) - 0.5);
    }
    s.zb = g.initial_bed();
    Solver solver(g, c, c.params);
    const double b0 = solver.bed_volume(s);
    const double out = solver.step_exner(s, 0.005);
    const double b1 = solver.bed_volume(s);
    CHECK(std::abs((1.0 - c.params.porosity) * (b1 - b0) + out) < 1e-12 * b0);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(s.zb[k] >= g.z_fixed[k] - 1e-15);
  }
}

TEST_CASE("hydro step conserves water") {
  RunConfig c;
  c.dx = c.dy = 0.2;
  c.morphodynamics = false;
  const Grid g = grid_for(c);
  FlowState s = initial_state(g, c);
  Solver solver(g, c, c.params);
  const double v0 = solver.water_volume(s);
  double out = 0.0;
  for (int n = 0; n < 200; ++n) out += solver.step_hydro(s, solver.compute_dt(s));
  CHECK(std::abs(solver.water_volume(s) - v0 + out) / v0 < 1e-12);
}

TEST_CASE("default run scours and deposits") {
  const RunConfig c = desk_config(6.0);
  const Grid g = grid_for(c);
  const SimulationResult r = run_simulation(g, c, c.params);
  REQUIRE(r.ok);
  const auto z0 = g.initial_bed();
  double scour = 0.0;
  double deposit = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    scour = std::min(scour, r.zb_final[k] - z0[k]);
    deposit = std::max(deposit, r.zb_final[k] - z0[k]);
  }
  CHECK(scour < -1e-3);
  CHECK(deposit > 1e-3);
  CHECK(r.ledger.water_error() < 1e-10);
  CHECK(r.ledger.sediment_error(c.params.porosity) < 1e-10 * analytic_sediment_volume(FlumeGeometry::channel()));
}

TEST_CASE("transport coefficient drives bed change") {
  const RunConfig c = desk_config(4.0);
  const Grid g = grid_for(c);
  MorphoParams lo = c.params;
  MorphoParams hi = c.params;
  lo.alpha_mpm = 2.66;
  hi.alpha_mpm = 32.0;
  const auto rl = run_simulation(g, c, lo);
  const auto rh = run_simulation(g, c, hi);
  REQUIRE(rl.ok);
  REQUIRE(rh.ok);
  CHECK(l2_change(g, rh) > l2_change(g, rl));
}

TEST_CASE("zero duration run") {
  const RunConfig c = desk_config(0.0);
  const Grid g = grid_for(c);
  const SimulationResult r = run_simulation(g, c, c.params);
  REQUIRE(r.ok);
  CHECK(r.times.size() == 1);
  CHECK(r.zb_final == g.initial_bed());
  CHECK(r.probe_eta.size() == r.probe_names.size());
}

TEST_CASE("bed change converges under refinement") {
  double prev_norm = 0.0;
  std::vector<double> norms;
  for (double d : {0.2, 0.1, 0.05}) {
    RunConfig c = desk_config(20.0);
    c.dx = c.dy = d;
    const Grid g = grid_for(c);
    const auto r = run_simulation(g, c, c.params);
    REQUIRE(r.ok);
    norms.push_back(l2_change(g, r));
    prev_norm = norms.back();
  }
  CHECK(prev_norm > 0.0);
  CHECK(std::abs(norms[2] - norms[1]) < std::abs(norms[1] - norms[0]));
}

TEST_CASE("simulation file round trip") {
  const RunConfig c = desk_config(0.5);
  const Grid g = grid_for(c);
  const SimulationResult r = run_simulation(g, c, c.params);
  const auto path = std::filesystem::temp_directory_path() / "morphouq_sim_roundtrip.bin";
  write_simulation(path, r);
  const SimulationResult back = read_simulation(path);
  CHECK(back.zb_final == r.zb_final);
  CHECK(back.probe_eta == r.probe_eta);
  CHECK(back.grid_hash == r.grid_hash);
  CHECK(back.params.to_array() == r.params.to_array());
}
