#include "morphouq/uq/prior.hpp"

#include <cmath>

#include "morphouq/errors.hpp"
#include "morphouq/rng.hpp"

namespace morphouq {

int PriorSpec::column(Param p) const {
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i] == p) return static_cast<int>(i);
  }
  return -1;
}

void PriorSpec::validate() const {
  if (layout.empty()) throw ConfigError("prior: no parameters");
  if (layout.size() != bounds.size()) throw ConfigError("prior: layout and bounds differ in size");
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const Interval& b = bounds[i];
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !(b.lo < b.hi)) {
      throw ConfigError("prior." + std::string(param_name(layout[i])) +
                        ": bounds must be finite with lower < upper");
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (layout[j] == layout[i]) {
        throw ConfigError("prior." + std::string(param_name(layout[i])) + ": listed twice");
      }
    }
  }
  if (!(sigma_scale > 0.0)) throw ConfigError("prior.sigma_scale: must be positive");
}

nlohmann::json PriorSpec::to_json() const {
  nlohmann::json params = nlohmann::json::array();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    params.push_back({{"name", param_name(layout[i])}, {"lo", bounds[i].lo}, {"hi", bounds[i].hi}});
  }
  return {{"name", name}, {"params", params}, {"sigma_scale", sigma_scale}};
}

PriorSpec PriorSpec::from_json(const nlohmann::json& j) {
  PriorSpec p;
  try {
    p.name = j.at("name").get<std::string>();
    for (const auto& e : j.at("params")) {
      p.layout.push_back(param_from_name(e.at("name").get<std::string>()));
      p.bounds.push_back({e.at("lo").get<double>(), e.at("hi").get<double>()});
    }
    p.sigma_scale = j.at("sigma_scale").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("prior: malformed description (") + e.what() + ")");
  }
  p.validate();
  return p;
}

PriorSpec PriorSpec::screening() {
  PriorSpec p;
  p.name = "screening";
  for (Param q : kAllParams) {
    p.layout.push_back(q);
    p.bounds.push_back(param_support(q));
  }
  return p;
}

PriorSpec PriorSpec::reduced() {
  PriorSpec p;
  p.name = "reduced";
  for (Param q : {Param::AlphaMpm, Param::AlphaKs, Param::Beta2, Param::Beta}) {
    p.layout.push_back(q);
    p.bounds.push_back(param_support(q));
  }
  return p;
}

PriorSpec PriorSpec::preset(const std::string& name) {
  if (name == "screening") return screening();
  if (name == "reduced") return reduced();
  throw ConfigError("prior: unknown preset '" + name + "' (expected screening or reduced)");
}

std::vector<double> sample_prior(const PriorSpec& prior, std::size_t n, std::uint64_t seed) {
  prior.validate();
  const std::size_t d = prior.dim();
  std::vector<double> out(n * d);
  Rng rng = make_rng(seed, 0x5052494f52ULL);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) {
      const Interval& b = prior.bounds[c];
      out[i * d + c] = b.lo + (b.hi - b.lo) * uniform01(rng);
    }
  }
  return out;
}

}  // namespace morphouq
