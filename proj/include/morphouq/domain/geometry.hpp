#pragma once

#include <string>
#include <vector>

namespace morphouq {

/// z = offset + sx * (x - x_ref) + sy * (y - y_ref)
struct LinearRule {
  double offset = 0.0;
  double sx = 0.0;
  double x_ref = 0.0;
  double sy = 0.0;
  double y_ref = 0.0;

  double eval(double x, double y) const { return offset + sx * (x - x_ref) + sy * (y - y_ref); }

  static LinearRule constant(double z) { return {z, 0.0, 0.0, 0.0, 0.0}; }
  static LinearRule along_y(double slope, double y_ref) { return {0.0, 0.0, 0.0, slope, y_ref}; }
  static LinearRule along_x(double slope, double x_ref) { return {0.0, slope, x_ref, 0.0, 0.0}; }
};

/// y-bound of a sub-zone as an affine function of x.
struct EdgeLine {
  double c0 = 0.0;
  double c1 = 0.0;
  double at(double x) const { return c0 + c1 * x; }
};

struct SubZone {
  std::string id;
  double x_lo = 0.0;
  double x_hi = 0.0;
  EdgeLine y_lo;
  EdgeLine y_hi;
  /// Bed surface including the initial sediment layer.
  LinearRule bathymetry;
  /// Non-erodible floor: the maximum of these rules.
  std::vector<LinearRule> floor;

  bool contains(double x, double y, double tol = 0.0) const;
  double fixed_floor(double x, double y) const;
};

struct SedimentZone {
  std::string zone_id;
  double thickness = 0.0;  // nominal erodible-layer thickness, m
};

/// Plan-view flume description. The modelled footprint may be narrower than
/// the physical flume; cells lying in `reservoir_zone` then carry a plan-area
/// factor so the released volume is preserved.
struct FlumeGeometry {
  std::string name;
  std::vector<SubZone> sub_zones;
  std::vector<SedimentZone> sediment_zones;
  double dam_x = 12.09;

  double x_min = 0.0;
  double x_max = 27.59;
  double y_min = 0.0;
  double y_max = 9.2;

  std::string reservoir_zone = "1";
  double reservoir_area_factor = 1.0;

  /// Index of the first sub-zone containing the point, or -1.
  int locate(double x, double y, double tol = 0.0) const;
  const SubZone& zone(double x, double y) const;  // throws DomainError

  /// Physical flume, full 9.2 m width.
  static FlumeGeometry full_flume();
  /// Channel strip y in [2.8, 6.4]; zone 1 is represented by widened cells.
  static FlumeGeometry channel();
  /// Preset by name ("channel" or "full"); throws ConfigError.
  static FlumeGeometry preset(const std::string& name);
};

/// Bed elevation including initial sediment. Throws DomainError outside every zone.
double build_bathymetry(const FlumeGeometry& geometry, double x, double y);

/// Non-erodible floor elevation at a point. Throws DomainError outside every zone.
double fixed_floor(const FlumeGeometry& geometry, double x, double y);

/// Analytic volume of the initial erodible layer over the modelled footprint,
/// including the reservoir area factor.
double analytic_sediment_volume(const FlumeGeometry& geometry);

}  // namespace morphouq
