#pragma once
// First-order finite-volume shallow-water solver (HLL fluxes with hydrostatic
// reconstruction) coupled by operator splitting to an explicit Exner update.

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "morphouq/domain/config.hpp"
#include "morphouq/domain/grid.hpp"
#include "morphouq/model/params.hpp"
#include "morphouq/simd/kernels.hpp"

namespace morphouq {

/// Conserved variables on the grid. Velocities are hu / h on wet cells.
struct FlowState {
  std::vector<double> h;
  std::vector<double> hu;
  std::vector<double> hv;
  std::vector<double> zb;
  double t = 0.0;

  double u(std::size_t k, double h_dry) const { return h[k] > h_dry ? hu[k] / h[k] : 0.0; }
  double v(std::size_t k, double h_dry) const { return h[k] > h_dry ? hv[k] / h[k] : 0.0; }
};

/// Still water at `upstream_level` behind the dam, `downstream_depth` over the
/// downstream sediment bed, dry elsewhere.
FlowState initial_state(const Grid& grid, const RunConfig& config);

struct SolverDiagnostics {
  std::uint64_t steps = 0;
  std::uint64_t skin_friction_saturated = 0;
  std::uint64_t direction_fallbacks = 0;
  std::uint64_t slope_factor_clipped = 0;
  std::uint64_t limiter_activations = 0;
  std::uint64_t depth_clamps = 0;
  double min_dt = 0.0;

  nlohmann::json to_json() const;
};

/// Reusable stepping workspace bound to one grid and configuration.
class Solver {
 public:
  Solver(const Grid& grid, const RunConfig& config, const MorphoParams& params);

  /// Largest stable step (CFL target), capped by dt_max.
  double compute_dt(const FlowState& s) const;

  /// Advances (h, hu, hv) by dt; returns the water volume leaving through the
  /// outflow boundary. Throws SolverError on a negative or non-finite depth.
  double step_hydro(FlowState& s, double dt);

  /// Advances z_b by dt using the current flow; returns the solid sediment
  /// volume leaving through the outflow boundary.
  double step_exner(FlowState& s, double dt);

  double water_volume(const FlowState& s) const;
  /// Bulk erodible-layer volume sum((z_b - z_fixed) * area).
  double bed_volume(const FlowState& s) const;

  const SolverDiagnostics& diagnostics() const { return diag_; }
  SolverDiagnostics& diagnostics() { return diag_; }
  const Grid& grid() const { return grid_; }

 private:
  enum FaceKind : std::uint8_t { kOpen, kWallLeft, kWallRight, kClosed };

  void classify_faces();
  void bed_slopes(const FlowState& s);

  const Grid& grid_;
  RunConfig config_;
  MorphoParams params_;
  simd::HllConstants hll_;
  SolverDiagnostics diag_;

  // x faces: (nx - 1) per row; y faces: nx per row pair.
  std::vector<FaceKind> xkind_, ykind_;
  std::vector<double> fx_mass_, fx_left_, fx_right_, fx_tan_;
  std::vector<double> fy_mass_, fy_left_, fy_right_, fy_tan_;
  // Boundary faces (walls, or the outflow on the east side).
  std::vector<double> west_mom_, east_mass_, east_mom_, east_tan_, south_mom_, north_mom_;
  std::vector<double> dqx_, dqy_;
  // Exner work arrays.
  std::vector<double> qsx_, qsy_, dzdx_, dzdy_, ratio_;
};

/// Single-step convenience wrappers over a temporary Solver.
void step_hydro(FlowState& state, const Grid& grid, const RunConfig& config, double dt);
void step_exner(FlowState& state, const Grid& grid, const MorphoParams& params,
                const RunConfig& config, double dt);

}  // namespace morphouq
