#include "morphouq/model/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "morphouq/errors.hpp"
#include "morphouq/io/container.hpp"

namespace morphouq {

namespace {

// Below this the integration is considered stalled.
constexpr double kMinDt = 1e-9;

nlohmann::json params_to_json(const MorphoParams& p) {
  nlohmann::json j;
  for (Param q : kAllParams) j[std::string(param_name(q))] = p[q];
  return j;
}

MorphoParams params_from_json(const nlohmann::json& j) {
  MorphoParams p;
  for (Param q : kAllParams) p[q] = j.at(std::string(param_name(q))).get<double>();
  return p;
}

}  // namespace

double MassLedger::water_error() const {
  if (water_volume.empty() || water_volume.front() == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < water_volume.size(); ++i) {
    worst = std::max(worst, std::abs(water_volume[i] - water_volume[0] + water_outflow[i]));
  }
  return worst / water_volume.front();
}

double MassLedger::sediment_error(double porosity) const {
  double worst = 0.0;
  for (std::size_t i = 0; i < bed_volume.size(); ++i) {
    worst = std::max(worst, std::abs((1.0 - porosity) * (bed_volume[i] - bed_volume[0]) +
                                     sediment_outflow[i]));
  }
  return worst;
}

Grid grid_for(const RunConfig& config) {
  return build_grid(FlumeGeometry::preset(config.geometry), config.dx, config.dy);
}

SimulationResult run_simulation(const Grid& grid, const RunConfig& config,
                                const MorphoParams& params) {
  const auto start = std::chrono::steady_clock::now();
  SimulationResult r;
  r.params = params;
  r.grid_hash = grid.hash();
  r.config_hash = config_hash(config);
  r.seed = config.seed;
  r.nx = grid.nx;
  r.ny = grid.ny;

  std::vector<std::size_t> probe_cells;
  for (const Probe& p : config.probes) {
    const auto k = grid.locate(p.x, p.y);
    if (!k) {
      throw ConfigError("probes: '" + p.name + "' at (" + std::to_string(p.x) + ", " +
                        std::to_string(p.y) + ") is outside the active grid");
    }
    probe_cells.push_back(*k);
    r.probe_names.push_back(p.name);
  }

  const std::size_t n_out = config.time.output_count();
  r.times.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) r.times[i] = static_cast<double>(i) * config.time.output_interval;
  r.times.back() = config.time.t_end;
  const std::size_t np = probe_cells.size();
  r.probe_eta.assign(np * n_out, std::nan(""));
  r.probe_depth.assign(np * n_out, std::nan(""));

  FlowState state = initial_state(grid, config);
  Solver solver(grid, config, params);
  double water_out = 0.0;
  double sediment_out = 0.0;

  auto record = [&](std::size_t step) {
    for (std::size_t p = 0; p < np; ++p) {
      const std::size_t k = probe_cells[p];
      r.probe_eta[p * n_out + step] = state.zb[k] + state.h[k];
      r.probe_depth[p * n_out + step] = state.h[k];
    }
    r.ledger.water_volume.push_back(solver.water_volume(state));
    r.ledger.water_outflow.push_back(water_out);
    r.ledger.bed_volume.push_back(solver.bed_volume(state));
    r.ledger.sediment_outflow.push_back(sediment_out);
  };

  record(0);
  std::size_t next = 1;
  try {
    while (next < n_out) {
      const double target = r.times[next];
      double dt = solver.compute_dt(state);
      bool reached = false;
      if (state.t + dt >= target - 1e-12 * std::max(1.0, target)) {
        dt = target - state.t;
        reached = true;
      }
      if (!(dt > kMinDt) && !reached) {
        throw SolverError("time step collapsed to " + std::to_string(dt) + " s at t = " +
                          std::to_string(state.t));
      }
      if (dt > 0.0) {
        water_out += solver.step_hydro(state, dt);
        if (config.morphodynamics) sediment_out += solver.step_exner(state, dt);
      }
      if (reached) {
        state.t = target;
        record(next);
        ++next;
      }
    }
  } catch (const SolverError& e) {
    r.ok = false;
    r.failure = e.what();
  }
  r.zb_final = state.zb;
  r.diagnostics = solver.diagnostics();
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

void write_simulation(const std::filesystem::path& path, const SimulationResult& r) {
  io::Container c;
  c.kind = "simulation";
  c.meta = {{"ok", r.ok},
            {"failure", r.failure},
            {"params", params_to_json(r.params)},
            {"grid_hash", r.grid_hash},
            {"config_hash", r.config_hash},
            {"seed", r.seed},
            {"nx", r.nx},
            {"ny", r.ny},
            {"probes", r.probe_names},
            {"times", r.times.size()},
            {"ledger_rows", r.ledger.water_volume.size()},
            {"diagnostics", r.diagnostics.to_json()}};
  auto append = [&c](const std::vector<double>& v) {
    c.payload.insert(c.payload.end(), v.begin(), v.end());
  };
  append(r.times);
  append(r.probe_eta);
  append(r.probe_depth);
  append(r.zb_final);
  append(r.ledger.water_volume);
  append(r.ledger.water_outflow);
  append(r.ledger.bed_volume);
  append(r.ledger.sediment_outflow);
  io::write_container(path, c);
}

SimulationResult read_simulation(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, "simulation");
  SimulationResult r;
  try {
    const auto& m = c.meta;
    r.ok = m.at("ok").get<bool>();
    r.failure = m.at("failure").get<std::string>();
    r.params = params_from_json(m.at("params"));
    r.grid_hash = m.at("grid_hash").get<std::string>();
    r.config_hash = m.at("config_hash").get<std::string>();
    r.seed = m.at("seed").get<std::uint64_t>();
    r.nx = m.at("nx").get<int>();
    r.ny = m.at("ny").get<int>();
    r.probe_names = m.at("probes").get<std::vector<std::string>>();
    const auto nt = m.at("times").get<std::size_t>();
    const auto nl = m.at("ledger_rows").get<std::size_t>();
    const auto& d = m.at("diagnostics");
    r.diagnostics.steps = d.at("steps").get<std::uint64_t>();
    r.diagnostics.skin_friction_saturated = d.at("skin_friction_saturated").get<std::uint64_t>();
    r.diagnostics.direction_fallbacks = d.at("direction_fallbacks").get<std::uint64_t>();
    r.diagnostics.slope_factor_clipped = d.at("slope_factor_clipped").get<std::uint64_t>();
    r.diagnostics.limiter_activations = d.at("limiter_activations").get<std::uint64_t>();
    r.diagnostics.depth_clamps = d.at("depth_clamps").get<std::uint64_t>();
    r.diagnostics.min_dt = d.at("min_dt").get<double>();
    io::PayloadReader in(c.payload);
    const std::size_t np = r.probe_names.size();
    r.times = in.take(nt);
    r.probe_eta = in.take(np * nt);
    r.probe_depth = in.take(np * nt);
    r.zb_final = in.take(static_cast<std::size_t>(r.nx) * static_cast<std::size_t>(r.ny));
    r.ledger.water_volume = in.take(nl);
    r.ledger.water_outflow = in.take(nl);
    r.ledger.bed_volume = in.take(nl);
    r.ledger.sediment_outflow = in.take(nl);
    if (!in.exhausted()) throw FormatError("trailing payload");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed simulation metadata (" + e.what() + ")");
  }
  return r;
}

void write_probe_csv(const std::filesystem::path& path, const SimulationResult& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  out << "t";
  for (const auto& n : r.probe_names) out << ',' << n;
  out << '\n';
  for (std::size_t t = 0; t < r.times.size(); ++t) {
    out << r.times[t];
    for (std::size_t p = 0; p < r.probe_names.size(); ++p) out << ',' << r.eta(p, t);
    out << '\n';
  }
}

void write_bed_csv(const std::filesystem::path& path, const Grid& grid, const SimulationResult& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  out << "x,y,z_initial,z_final,dz\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      if (!grid.active[k]) continue;
      const double z0 = grid.z_fixed[k] + grid.erodible0[k];
      out << grid.xc(i) << ',' << grid.yc(j) << ',' << z0 << ',' << r.zb_final[k] << ','
          << r.zb_final[k] - z0 << '\n';
    }
  }
}

}  // namespace morphouq
