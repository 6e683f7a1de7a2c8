#include "morphouq/domain/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "morphouq/errors.hpp"
#include "morphouq/io/hash.hpp"

namespace morphouq {

using nlohmann::json;

std::size_t TimeControls::output_count() const {
  return static_cast<std::size_t>(std::llround(t_end / output_interval)) + 1;
}

std::vector<Probe> default_probes() {
  return {{"P1", 8.09, 4.6},  {"P2", 10.09, 4.6}, {"P3", 12.09, 4.6}, {"P4", 13.09, 4.6},
          {"P5", 14.59, 4.6}, {"P6", 16.09, 4.6}, {"P7", 18.09, 4.6}, {"P8", 20.09, 4.6}};
}

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) fail(key, what);
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) fail(key, "expected a number, got " + std::string(v.type_name()));
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(key, "must be finite");
  return d;
}

using Setter = std::function<void(RunConfig&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto phys = [&t](const std::string& key, double PhysicalConstants::*m) {
      t[key] = [m, key](RunConfig& c, const json& v) { c.phys.*m = as_number(v, key); };
    };
    auto time = [&t](const std::string& key, double TimeControls::*m) {
      t[key] = [m, key](RunConfig& c, const json& v) { c.time.*m = as_number(v, key); };
    };
    auto top = [&t](const std::string& key, double RunConfig::*m) {
      t[key] = [m, key](RunConfig& c, const json& v) { c.*m = as_number(v, key); };
    };
    phys("g", &PhysicalConstants::g);
    phys("rho", &PhysicalConstants::rho);
    phys("rho_s", &PhysicalConstants::rho_s);
    phys("d50", &PhysicalConstants::d50);
    phys("nu", &PhysicalConstants::nu);
    phys("kappa", &PhysicalConstants::kappa);
    phys("manning_n", &PhysicalConstants::manning_n);
    time("t_end", &TimeControls::t_end);
    time("cfl", &TimeControls::cfl);
    time("dt_max", &TimeControls::dt_max);
    time("output_interval", &TimeControls::output_interval);
    top("dx", &RunConfig::dx);
    top("dy", &RunConfig::dy);
    top("h_dry", &RunConfig::h_dry);
    top("upstream_level", &RunConfig::upstream_level);
    top("downstream_depth", &RunConfig::downstream_depth);
    for (Param p : kAllParams) {
      const std::string key(param_name(p));
      t[key] = [p, key](RunConfig& c, const json& v) { c.params[p] = as_number(v, key); };
    }
    t["schema_version"] = [](RunConfig& c, const json& v) {
      if (!v.is_number_integer()) fail("schema_version", "expected an integer");
      c.schema_version = v.get<int>();
    };
    t["geometry"] = [](RunConfig& c, const json& v) {
      if (!v.is_string()) fail("geometry", "expected a string");
      c.geometry = v.get<std::string>();
    };
    t["morphodynamics"] = [](RunConfig& c, const json& v) {
      if (!v.is_boolean()) fail("morphodynamics", "expected a boolean");
      c.morphodynamics = v.get<bool>();
    };
    t["seed"] = [](RunConfig& c, const json& v) {
      if (!v.is_number_unsigned()) fail("seed", "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    };
    t["probes"] = [](RunConfig& c, const json& v) {
      if (!v.is_array()) fail("probes", "expected an array of {name, x, y}");
      std::vector<Probe> probes;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const json& p = v[i];
        const std::string key = "probes[" + std::to_string(i) + "]";
        if (!p.is_object()) fail(key, "expected an object");
        Probe probe;
        for (const auto& [k, val] : p.items()) {
          if (k == "name") {
            if (!val.is_string()) fail(key + ".name", "expected a string");
            probe.name = val.get<std::string>();
          } else if (k == "x") {
            probe.x = as_number(val, key + ".x");
          } else if (k == "y") {
            probe.y = as_number(val, key + ".y");
          } else {
            fail(key + "." + k, "unknown key");
          }
        }
        if (!p.contains("x") || !p.contains("y")) fail(key, "x and y are required");
        if (probe.name.empty()) probe.name = "P" + std::to_string(i + 1);
        probes.push_back(probe);
      }
      c.probes = std::move(probes);
    };
    return t;
  }();
  return table;
}

}  // namespace

void validate(const RunConfig& c) {
  require(c.schema_version == 1, "schema_version", "unsupported version (expected 1)");
  const PhysicalConstants& p = c.phys;
  require(p.g > 0.0, "g", "must be positive");
  require(p.rho > 0.0, "rho", "must be positive");
  require(p.rho_s > p.rho, "rho_s", "must exceed rho");
  require(p.d50 > 0.0, "d50", "must be positive");
  require(p.nu >= 0.0, "nu", "must be non-negative");
  require(p.kappa > 0.0, "kappa", "must be positive");
  require(p.manning_n >= 0.0, "manning_n", "must be non-negative");
  for (Param q : kAllParams) {
    const Interval s = param_support(q);
    const double v = c.params[q];
    if (!s.contains(v)) {
      std::ostringstream msg;
      msg << "value " << v << " outside support [" << s.lo << ", " << s.hi << "]";
      fail(std::string(param_name(q)), msg.str());
    }
  }
  const TimeControls& t = c.time;
  require(t.t_end >= 0.0, "t_end", "must be non-negative");
  require(t.cfl > 0.0 && t.cfl < 0.2, "cfl", "must lie in (0, 0.2)");
  require(t.dt_max > 0.0, "dt_max", "must be positive");
  require(t.output_interval > 0.0, "output_interval", "must be positive");
  const double steps = t.t_end / t.output_interval;
  require(std::abs(steps - std::round(steps)) < 1e-9 * std::max(1.0, steps), "output_interval",
          "must divide t_end");
  require(c.geometry == "channel" || c.geometry == "full", "geometry",
          "expected \"channel\" or \"full\"");
  require(c.dx > 0.0, "dx", "must be positive");
  require(c.dy > 0.0, "dy", "must be positive");
  require(c.h_dry > 0.0, "h_dry", "must be positive");
  require(c.downstream_depth >= 0.0, "downstream_depth", "must be non-negative");
  std::set<std::string> names;
  for (const Probe& pr : c.probes) {
    require(names.insert(pr.name).second, "probes", "duplicate probe name '" + pr.name + "'");
  }
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  RunConfig c;
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    auto it = table.find(key);
    if (it == table.end()) fail(key, "unknown key");
    it->second(c, value);
  }
  validate(c);
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = c.schema_version;
  j["g"] = c.phys.g;
  j["rho"] = c.phys.rho;
  j["rho_s"] = c.phys.rho_s;
  j["d50"] = c.phys.d50;
  j["nu"] = c.phys.nu;
  j["kappa"] = c.phys.kappa;
  j["manning_n"] = c.phys.manning_n;
  for (Param p : kAllParams) j[std::string(param_name(p))] = c.params[p];
  j["t_end"] = c.time.t_end;
  j["cfl"] = c.time.cfl;
  j["dt_max"] = c.time.dt_max;
  j["output_interval"] = c.time.output_interval;
  j["geometry"] = c.geometry;
  j["dx"] = c.dx;
  j["dy"] = c.dy;
  j["h_dry"] = c.h_dry;
  j["upstream_level"] = c.upstream_level;
  j["downstream_depth"] = c.downstream_depth;
  j["morphodynamics"] = c.morphodynamics;
  json probes = json::array();
  for (const Probe& p : c.probes) probes.push_back({{"name", p.name}, {"x", p.x}, {"y", p.y}});
  j["probes"] = probes;
  j["seed"] = c.seed;
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return RunConfig{};
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON (" + e.what() + ")");
  }
  return config_from_json(j);
}

std::string config_hash(const RunConfig& config) {
  return io::hash_bytes(config_to_json(config).dump());
}

}  // namespace morphouq
