#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "morphouq/domain/geometry.hpp"

namespace morphouq {

/// Uniform structured grid, cells stored row-major (index = j * nx + i).
///
/// Inactive cells (walls outside every sub-zone) take no part in the update;
/// faces between an active and an inactive cell behave as reflective walls.
struct Grid {
  int nx = 0;
  int ny = 0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0;
  double y0 = 0.0;
  double dam_x = 12.09;
  /// Free outflow on the downstream (x = max) boundary, wall otherwise.
  bool east_outflow = true;

  std::vector<double> z_fixed;
  std::vector<double> erodible0;
  /// Plan-area multiplier (1 except in widened reservoir cells).
  std::vector<double> area_factor;
  std::vector<std::uint8_t> active;
  /// Sub-zone index per cell, -1 when inactive or not built from a geometry.
  std::vector<int> zone;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) + static_cast<std::size_t>(i);
  }
  double xc(int i) const { return x0 + (i + 0.5) * dx; }
  double yc(int j) const { return y0 + (j + 0.5) * dy; }
  double cell_area(std::size_t k) const { return dx * dy * area_factor[k]; }
  std::size_t active_count() const;

  /// Active cell whose footprint contains (x, y), if any.
  std::optional<std::size_t> locate(double x, double y) const;
  /// Initial bed elevation z_fixed + erodible0.
  std::vector<double> initial_bed() const;
  /// Provenance hash over dimensions, bed and masks.
  std::string hash() const;
};

/// Samples the geometry at cell centres. nx = round(extent / dx); the cell
/// size is then adjusted so the cells tile the extent exactly.
/// Throws ConfigError on non-positive sizes.
Grid build_grid(const FlumeGeometry& geometry, double dx, double dy);

/// All-active rectangular box with the given bed (flat at 0 when empty) and
/// walls on every side unless `east_outflow` is set. Used for benchmarks.
Grid make_box_grid(int nx, int ny, double dx, double dy, std::vector<double> bed = {},
                   bool east_outflow = false);

/// Writes x, y, z_bed, erodible_depth for every active cell.
void write_geometry_csv(const Grid& grid, const std::filesystem::path& path);

}  // namespace morphouq
