#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphouq/domain/config.hpp"
#include "morphouq/domain/grid.hpp"
#include "morphouq/model/params.hpp"
#include "morphouq/model/solver.hpp"

namespace morphouq {

/// Volumes recorded at each output instant.
struct MassLedger {
  std::vector<double> water_volume;      // m3 in the domain
  std::vector<double> water_outflow;     // cumulative m3 through the outflow boundary
  std::vector<double> bed_volume;        // bulk erodible-layer volume, m3
  std::vector<double> sediment_outflow;  // cumulative solid m3 through the outflow boundary

  /// Largest |V(t) - V(0) + out(t)| / V(0).
  double water_error() const;
  /// Largest |(1 - porosity)(B(t) - B(0)) + out(t)|, absolute m3.
  double sediment_error(double porosity) const;
};

struct SimulationResult {
  bool ok = true;
  std::string failure;
  MorphoParams params;
  std::string grid_hash;
  std::string config_hash;
  std::uint64_t seed = 0;

  int nx = 0;
  int ny = 0;
  std::vector<std::string> probe_names;
  std::vector<double> times;
  /// Free surface z_b + h, probe-major: eta[p * times.size() + t].
  std::vector<double> probe_eta;
  /// Water depth at the probes, same layout.
  std::vector<double> probe_depth;
  std::vector<double> zb_final;
  MassLedger ledger;
  SolverDiagnostics diagnostics;
  double wall_seconds = 0.0;

  double eta(std::size_t probe, std::size_t step) const {
    return probe_eta[probe * times.size() + step];
  }
};

/// Integrates from the initial state to t_end, recording probes and ledgers
/// at every output instant. Solver failures are returned as a result with
/// ok == false rather than thrown. Probes outside the active grid throw
/// ConfigError.
SimulationResult run_simulation(const Grid& grid, const RunConfig& config,
                                const MorphoParams& params);

/// Builds the grid named by the config.
Grid grid_for(const RunConfig& config);

void write_simulation(const std::filesystem::path& path, const SimulationResult& r);
SimulationResult read_simulation(const std::filesystem::path& path);

/// Writes t followed by one eta column per probe.
void write_probe_csv(const std::filesystem::path& path, const SimulationResult& r);
/// Writes x, y, z_initial, z_final, dz for every active cell.
void write_bed_csv(const std::filesystem::path& path, const Grid& grid, const SimulationResult& r);

}  // namespace morphouq
