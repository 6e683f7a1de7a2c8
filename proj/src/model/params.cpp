#include "morphouq/model/params.hpp"

#include <string>

#include "morphouq/errors.hpp"

namespace morphouq {

std::string_view param_name(Param p) {
  switch (p) {
    case Param::AlphaMpm:
      return "alpha_mpm";
    case Param::ThetaCr:
      return "theta_cr";
    case Param::Porosity:
      return "porosity";
    case Param::AlphaKs:
      return "alpha_ks";
    case Param::Beta2:
      return "beta2";
    case Param::Beta:
      return "beta";
  }
  return "?";
}

Param param_from_name(std::string_view name) {
  for (Param p : kAllParams) {
    if (param_name(p) == name) return p;
  }
  throw ConfigError("unknown parameter name '" + std::string(name) + "'");
}

Interval param_support(Param p) {
  switch (p) {
    case Param::AlphaMpm:
      return {2.66, 32.0};
    case Param::ThetaCr:
      return {0.022, 0.058};
    case Param::Porosity:
      return {0.31, 0.46};
    case Param::AlphaKs:
      return {1.0, 6.6};
    case Param::Beta2:
      return {0.2, 1.6};
    case Param::Beta:
      return {0.0, 5.0};
  }
  return {};
}

double& MorphoParams::operator[](Param p) {
  switch (p) {
    case Param::AlphaMpm:
      return alpha_mpm;
    case Param::ThetaCr:
      return theta_cr;
    case Param::Porosity:
      return porosity;
    case Param::AlphaKs:
      return alpha_ks;
    case Param::Beta2:
      return beta2;
    case Param::Beta:
      return beta;
  }
  return alpha_mpm;
}

double MorphoParams::operator[](Param p) const { return const_cast<MorphoParams&>(*this)[p]; }

bool MorphoParams::within_support() const {
  for (Param p : kAllParams) {
    if (!param_support(p).contains((*this)[p])) return false;
  }
  return true;
}

std::array<double, kParamCount> MorphoParams::to_array() const {
  std::array<double, kParamCount> out{};
  for (Param p : kAllParams) out[static_cast<std::size_t>(p)] = (*this)[p];
  return out;
}

MorphoParams params_from_values(std::span<const Param> layout, std::span<const double> values,
                                const MorphoParams& base) {
  if (layout.size() != values.size()) {
    throw ModelError("parameter layout has " + std::to_string(layout.size()) + " entries but " +
                     std::to_string(values.size()) + " values were given");
  }
  MorphoParams out = base;
  for (std::size_t i = 0; i < layout.size(); ++i) out[layout[i]] = values[i];
  return out;
}

}  // namespace morphouq
