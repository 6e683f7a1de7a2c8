#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphouq/model/params.hpp"

namespace morphouq {

/// Independent uniform priors on a subset of the morphodynamic parameters
/// plus a half-normal prior on the observation noise.
struct PriorSpec {
  std::string name;
  /// Parameter for each design column.
  std::vector<Param> layout;
  std::vector<Interval> bounds;
  double sigma_scale = 0.008;

  std::size_t dim() const { return layout.size(); }
  /// Column of `p` in the layout, or -1.
  int column(Param p) const;
  /// Throws ConfigError on inconsistent or empty bounds.
  void validate() const;

  nlohmann::json to_json() const;
  static PriorSpec from_json(const nlohmann::json& j);

  /// All six parameters on their literature supports.
  static PriorSpec screening();
  /// alpha_mpm, alpha_ks, beta2, beta (the influential subset).
  static PriorSpec reduced();
  /// "screening" or "reduced"; throws ConfigError.
  static PriorSpec preset(const std::string& name);
};

/// n x dim design matrix, row-major, i.i.d. uniform draws.
std::vector<double> sample_prior(const PriorSpec& prior, std::size_t n, std::uint64_t seed);

}  // namespace morphouq
