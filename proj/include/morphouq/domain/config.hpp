#pragma once
// Run configuration. The on-disk form is a flat JSON object; every key is
// optional and unspecified keys keep the defaults below.
//
//   schema_version    1
//   g, rho, rho_s     gravity m/s2, water and sediment density kg/m3
//   d50, nu, kappa    grain size m, kinematic viscosity m2/s, von Karman constant
//   manning_n         Manning coefficient s/m^(1/3)
//   alpha_mpm, theta_cr, porosity, alpha_ks, beta2, beta   default MorphoParams
//   t_end, cfl, dt_max, output_interval                    time controls, s
//   geometry          "channel" (default) or "full"
//   dx, dy            target cell sizes, m
//   h_dry             wetting threshold, m
//   upstream_level    initial free surface behind the dam, m
//   downstream_depth  initial water depth over the sediment bed downstream, m
//   morphodynamics    false for fixed-bed runs
//   probes            [{"name": "P1", "x": 8.09, "y": 4.6}, ...]
//   seed              unsigned integer

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphouq/model/params.hpp"

namespace morphouq {

struct PhysicalConstants {
  double g = 9.81;
  double rho = 1000.0;
  double rho_s = 2630.0;
  double d50 = 1.61e-3;
  double nu = 1e-6;
  double kappa = 0.40;
  double manning_n = 0.0165;

  double relative_density() const { return rho_s / rho; }
};

struct TimeControls {
  double t_end = 20.0;
  double cfl = 0.19;
  double dt_max = 0.01;
  double output_interval = 0.05;

  /// Number of recorded output instants including t = 0.
  std::size_t output_count() const;
};

struct Probe {
  std::string name;
  double x = 0.0;
  double y = 0.0;
};

/// Default probe set. The positions are assumed (centre line, spread over
/// the reservoir, the gate and the downstream reach) and overridable.
std::vector<Probe> default_probes();

struct RunConfig {
  int schema_version = 1;
  PhysicalConstants phys;
  MorphoParams params;
  TimeControls time;
  std::string geometry = "channel";
  double dx = 0.1;
  double dy = 0.1;
  double h_dry = 1e-6;
  double upstream_level = 0.47;
  double downstream_depth = 0.085;
  bool morphodynamics = true;
  std::vector<Probe> probes = default_probes();
  std::uint64_t seed = 0;
};

/// Throws ConfigError naming the offending key.
void validate(const RunConfig& config);

RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& config);
/// Reads and validates a config file; throws ConfigError (including on I/O
/// or JSON syntax errors).
RunConfig load_config(const std::filesystem::path& path);
/// Hash of the canonical JSON form.
std::string config_hash(const RunConfig& config);

}  // namespace morphouq
