#include "morphouq/domain/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "morphouq/errors.hpp"
#include "morphouq/io/hash.hpp"

namespace morphouq {

namespace {

// Cell centres that fall on a zone edge up to rounding still belong to it.
constexpr double kEdgeTol = 1e-9;

int cell_count(double extent, double size, const char* key) {
  if (!(size > 0.0) || !std::isfinite(size)) {
    throw ConfigError(std::string(key) + ": cell size must be positive, got " +
                      std::to_string(size));
  }
  const long n = std::lround(extent / size);
  if (n < 1) {
    throw ConfigError(std::string(key) + ": cell size " + std::to_string(size) +
                      " exceeds the modelled extent " + std::to_string(extent));
  }
  return static_cast<int>(n);
}

}  // namespace

std::size_t Grid::active_count() const {
  std::size_t n = 0;
  for (std::uint8_t a : active) n += a;
  return n;
}

std::optional<std::size_t> Grid::locate(double x, double y) const {
  const double fi = std::floor((x - x0) / dx);
  const double fj = std::floor((y - y0) / dy);
  if (fi < 0 || fj < 0 || fi >= nx || fj >= ny) return std::nullopt;
  const std::size_t k = index(static_cast<int>(fi), static_cast<int>(fj));
  if (!active[k]) return std::nullopt;
  return k;
}

std::vector<double> Grid::initial_bed() const {
  std::vector<double> z(size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = z_fixed[k] + erodible0[k];
  return z;
}

std::string Grid::hash() const {
  io::Fnv1a h;
  h.update_value(nx);
  h.update_value(ny);
  h.update_value(dx);
  h.update_value(dy);
  h.update_value(x0);
  h.update_value(y0);
  h.update_value(dam_x);
  h.update_value(east_outflow);
  h.update(std::span<const double>(z_fixed));
  h.update(std::span<const double>(erodible0));
  h.update(std::span<const double>(area_factor));
  h.update(active.data(), active.size());
  return h.hex();
}

Grid build_grid(const FlumeGeometry& geometry, double dx, double dy) {
  Grid g;
  g.nx = cell_count(geometry.x_max - geometry.x_min, dx, "dx");
  g.ny = cell_count(geometry.y_max - geometry.y_min, dy, "dy");
  g.dx = (geometry.x_max - geometry.x_min) / g.nx;
  g.dy = (geometry.y_max - geometry.y_min) / g.ny;
  g.x0 = geometry.x_min;
  g.y0 = geometry.y_min;
  g.dam_x = geometry.dam_x;
  g.east_outflow = true;

  const std::size_t n = g.size();
  g.z_fixed.assign(n, 0.0);
  g.erodible0.assign(n, 0.0);
  g.area_factor.assign(n, 1.0);
  g.active.assign(n, 0);
  g.zone.assign(n, -1);

  for (int j = 0; j < g.ny; ++j) {
    const double y = g.yc(j);
    for (int i = 0; i < g.nx; ++i) {
      const double x = g.xc(i);
      const std::size_t k = g.index(i, j);
      const int zi = geometry.locate(x, y, kEdgeTol);
      if (zi < 0) continue;
      const SubZone& z = geometry.sub_zones[static_cast<std::size_t>(zi)];
      const double floor = z.fixed_floor(x, y);
      g.active[k] = 1;
      g.zone[k] = zi;
      g.z_fixed[k] = floor;
      g.erodible0[k] = std::max(0.0, z.bathymetry.eval(x, y) - floor);
      if (z.id == geometry.reservoir_zone) g.area_factor[k] = geometry.reservoir_area_factor;
    }
  }
  return g;
}

Grid make_box_grid(int nx, int ny, double dx, double dy, std::vector<double> bed,
                   bool east_outflow) {
  if (nx < 1 || ny < 1) throw ConfigError("box grid: cell counts must be positive");
  if (!(dx > 0.0) || !(dy > 0.0)) throw ConfigError("box grid: cell sizes must be positive");
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.dx = dx;
  g.dy = dy;
  g.dam_x = 0.5 * nx * dx;
  g.east_outflow = east_outflow;
  const std::size_t n = g.size();
  if (bed.empty()) bed.assign(n, 0.0);
  if (bed.size() != n) throw ConfigError("box grid: bed has the wrong number of cells");
  g.z_fixed = std::move(bed);
  g.erodible0.assign(n, 0.0);
  g.area_factor.assign(n, 1.0);
  g.active.assign(n, 1);
  g.zone.assign(n, -1);
  return g;
}

void write_geometry_csv(const Grid& grid, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  out << "x,y,z_bed,erodible_depth\n";
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      if (!grid.active[k]) continue;
      out << grid.xc(i) << ',' << grid.yc(j) << ',' << grid.z_fixed[k] + grid.erodible0[k] << ','
          << grid.erodible0[k] << '\n';
    }
  }
}

}  // namespace morphouq
