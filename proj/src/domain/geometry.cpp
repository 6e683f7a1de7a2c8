#include "morphouq/domain/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "morphouq/errors.hpp"

namespace morphouq {

namespace {

constexpr double kBankSlope = 0.155 / 0.34;
constexpr double kSediment = 0.085;
constexpr double kChannelLo = 2.8;
constexpr double kChannelHi = 6.4;
constexpr double kFlumeWidth = 9.2;
constexpr double kFlumeLength = 27.59;

EdgeLine flat(double y) { return {y, 0.0}; }

// Bank rules. The left bank falls towards the channel axis, the right bank rises away from it.
LinearRule bank_left() { return LinearRule::along_y(-kBankSlope, 3.14); }
LinearRule bank_right() { return LinearRule::along_y(kBankSlope, 6.06); }

SubZone make(std::string id, double x0, double x1, EdgeLine y0, EdgeLine y1, LinearRule bathy,
             std::vector<LinearRule> floor) {
  return SubZone{std::move(id), x0, x1, y0, y1, bathy, std::move(floor)};
}

std::vector<SubZone> flume_zones() {
  const LinearRule zero = LinearRule::constant(0.0);
  const LinearRule sed = LinearRule::constant(kSediment);
  const std::vector<LinearRule> channel_floor{zero, bank_left(), bank_right()};
  const EdgeLine lo = flat(kChannelLo);
  const EdgeLine hi = flat(kChannelHi);
  // The sediment wedge in zone 3 narrows along these two lines.
  const EdgeLine wedge_lo{13.0, -0.932};
  const EdgeLine wedge_hi{-3.809, 0.932};

  std::vector<SubZone> z;
  z.push_back(make("1", 0.0, 1.76, flat(0.0), flat(kFlumeWidth), LinearRule::constant(-0.10),
                   {LinearRule::constant(-0.10)}));

  z.push_back(make("2a", 1.76, 10.59, lo, flat(3.14), bank_left(), {bank_left()}));
  z.push_back(make("2b", 1.76, 10.59, flat(3.14), flat(6.06), zero, {zero}));
  z.push_back(make("2c", 1.76, 10.59, flat(6.06), hi, bank_right(), {bank_right()}));

  z.push_back(make("3a", 10.59, 10.79, lo, wedge_lo, bank_left(), {bank_left()}));
  z.push_back(make("3b", 10.59, 10.79, wedge_lo, wedge_hi,
                   LinearRule::along_x(kSediment / 0.20, 10.59), channel_floor));
  z.push_back(make("3c", 10.59, 10.79, wedge_hi, hi, bank_right(), {bank_right()}));

  z.push_back(make("4a", 10.79, 11.59, lo, flat(2.954), bank_left(), {bank_left()}));
  z.push_back(make("4b", 10.79, 11.59, flat(2.954), flat(6.246), sed, channel_floor));
  z.push_back(make("4c", 10.79, 11.59, flat(6.246), hi, bank_right(), {bank_right()}));

  z.push_back(make("5", 11.59, 12.59, flat(4.10), flat(5.10), sed, {zero}));

  z.push_back(make("6a", 12.59, 21.09, lo, flat(2.954), bank_left(), {bank_left()}));
  z.push_back(make("6b", 12.59, 21.09, flat(2.954), flat(6.246), sed, channel_floor));
  z.push_back(make("6c", 12.59, 21.09, flat(6.246), hi, bank_right(), {bank_right()}));

  z.push_back(make("7a", 21.09, kFlumeLength, lo, flat(3.14), bank_left(), {bank_left()}));
  z.push_back(make("7b", 21.09, kFlumeLength, flat(3.14), flat(6.06), zero, {zero}));
  z.push_back(make("7c", 21.09, kFlumeLength, flat(6.06), hi, bank_right(), {bank_right()}));
  return z;
}

std::vector<SedimentZone> flume_sediment_zones() {
  return {{"3b", kSediment}, {"4b", kSediment}, {"5", kSediment}, {"6b", kSediment}};
}

}  // namespace

bool SubZone::contains(double x, double y, double tol) const {
  if (x < x_lo - tol || x > x_hi + tol) return false;
  return y >= y_lo.at(x) - tol && y <= y_hi.at(x) + tol;
}

double SubZone::fixed_floor(double x, double y) const {
  double z = floor.front().eval(x, y);
  for (std::size_t i = 1; i < floor.size(); ++i) z = std::max(z, floor[i].eval(x, y));
  return z;
}

int FlumeGeometry::locate(double x, double y, double tol) const {
  if (x < x_min - tol || x > x_max + tol || y < y_min - tol || y > y_max + tol) return -1;
  for (std::size_t i = 0; i < sub_zones.size(); ++i) {
    if (sub_zones[i].contains(x, y, tol)) return static_cast<int>(i);
  }
  return -1;
}

const SubZone& FlumeGeometry::zone(double x, double y) const {
  const int i = locate(x, y);
  if (i < 0) {
    std::ostringstream msg;
    msg << "point (" << x << ", " << y << ") lies outside every flume sub-zone";
    throw DomainError(msg.str());
  }
  return sub_zones[static_cast<std::size_t>(i)];
}

FlumeGeometry FlumeGeometry::full_flume() {
  FlumeGeometry g;
  g.name = "full";
  g.sub_zones = flume_zones();
  g.sediment_zones = flume_sediment_zones();
  g.x_min = 0.0;
  g.x_max = kFlumeLength;
  g.y_min = 0.0;
  g.y_max = kFlumeWidth;
  g.reservoir_area_factor = 1.0;
  return g;
}

FlumeGeometry FlumeGeometry::channel() {
  FlumeGeometry g = full_flume();
  g.name = "channel";
  g.y_min = kChannelLo;
  g.y_max = kChannelHi;
  g.sub_zones.front().y_lo = flat(kChannelLo);
  g.sub_zones.front().y_hi = flat(kChannelHi);
  g.reservoir_area_factor = kFlumeWidth / (kChannelHi - kChannelLo);
  return g;
}

FlumeGeometry FlumeGeometry::preset(const std::string& name) {
  if (name == "channel") return channel();
  if (name == "full") return full_flume();
  throw ConfigError("geometry: unknown preset '" + name + "' (expected channel or full)");
}

double build_bathymetry(const FlumeGeometry& geometry, double x, double y) {
  return geometry.zone(x, y).bathymetry.eval(x, y);
}

double fixed_floor(const FlumeGeometry& geometry, double x, double y) {
  return geometry.zone(x, y).fixed_floor(x, y);
}

double analytic_sediment_volume(const FlumeGeometry& geometry) {
  // Midpoint rule per zone on a fine mesh; the integrand is piecewise linear
  // so 2 mm cells resolve it far below any grid band.
  constexpr double h = 2e-3;
  double total = 0.0;
  for (const SubZone& z : geometry.sub_zones) {
    const int nx = std::max(1, static_cast<int>(std::ceil((z.x_hi - z.x_lo) / h)));
    const double hx = (z.x_hi - z.x_lo) / nx;
    double zone_total = 0.0;
    for (int i = 0; i < nx; ++i) {
      const double x = z.x_lo + (i + 0.5) * hx;
      const double y0 = z.y_lo.at(x);
      const double y1 = z.y_hi.at(x);
      if (y1 <= y0) continue;
      const int ny = std::max(1, static_cast<int>(std::ceil((y1 - y0) / h)));
      const double hy = (y1 - y0) / ny;
      for (int j = 0; j < ny; ++j) {
        const double y = y0 + (j + 0.5) * hy;
        zone_total += std::max(0.0, z.bathymetry.eval(x, y) - z.fixed_floor(x, y)) * hx * hy;
      }
    }
    if (z.id == geometry.reservoir_zone) zone_total *= geometry.reservoir_area_factor;
    total += zone_total;
  }
  return total;
}

}  // namespace morphouq
