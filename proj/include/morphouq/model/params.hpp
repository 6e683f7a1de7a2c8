#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace morphouq {

/// The six uncertain morphodynamic parameters, in canonical design-matrix order.
enum class Param : std::size_t { AlphaMpm = 0, ThetaCr, Porosity, AlphaKs, Beta2, Beta };

inline constexpr std::size_t kParamCount = 6;
inline constexpr std::array<Param, kParamCount> kAllParams = {
    Param::AlphaMpm, Param::ThetaCr, Param::Porosity, Param::AlphaKs, Param::Beta2, Param::Beta};

std::string_view param_name(Param p);
/// Parses a canonical name ("alpha_mpm", "theta_cr", ...); throws ConfigError.
Param param_from_name(std::string_view name);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

/// Literature-based support of each parameter.
Interval param_support(Param p);

struct MorphoParams {
  double alpha_mpm = 8.0;
  double theta_cr = 0.047;
  double porosity = 0.42;
  double alpha_ks = 3.0;
  double beta2 = 0.85;
  double beta = 1.3;

  double& operator[](Param p);
  double operator[](Param p) const;

  bool within_support() const;
  std::array<double, kParamCount> to_array() const;
};

/// `base` overwritten by `values` at the positions named by `layout`.
MorphoParams params_from_values(std::span<const Param> layout, std::span<const double> values,
                                const MorphoParams& base = MorphoParams{});

}  // namespace morphouq
