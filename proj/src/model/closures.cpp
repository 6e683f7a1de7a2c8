#include "morphouq/model/closures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace morphouq {

double friction_coefficient(double h, double manning_n, double g) {
  return 2.0 * g * manning_n * manning_n / std::cbrt(h);
}

Vec2 bed_shear_stress(double u, double v, double cf, double rho) {
  const double k = 0.5 * rho * cf * std::hypot(u, v);
  return {k * u, k * v};
}

double skin_friction_coefficient(double h, double alpha_ks, double d50, double kappa, double cf,
                                 bool* saturated) {
  const double ks = alpha_ks * d50;
  const double arg = 11.036 * h / ks;
  if (!(arg > 1.0)) {
    if (saturated != nullptr) *saturated = true;
    return cf;
  }
  if (saturated != nullptr) *saturated = false;
  const double r = kappa / std::log(arg);
  return 2.0 * r * r;
}

double skin_friction_shear(double tau_b, double h, double alpha_ks, double d50, double kappa,
                           double cf, bool* saturated) {
  if (saturated != nullptr) *saturated = false;
  if (tau_b == 0.0 || cf == 0.0) return 0.0;
  const double cfp = skin_friction_coefficient(h, alpha_ks, d50, kappa, cf, saturated);
  return cfp / cf * tau_b;
}

double shields_number(double tau, double rho_s, double rho, double d50, double g) {
  return tau / (g * (rho_s - rho) * d50);
}

double mpm_transport_rate(double theta, double alpha_mpm, double theta_cr, double s, double d50,
                          double g) {
  if (theta < theta_cr) return 0.0;
  const double excess = theta - theta_cr;
  return alpha_mpm * excess * std::sqrt(excess) * std::sqrt(g * (s - 1.0) * d50 * d50 * d50);
}

double TransportDirection::degrees() const {
  return std::atan2(sin_a, cos_a) * 180.0 / std::numbers::pi;
}

TransportDirection transport_direction(double u, double v, double dzdx, double dzdy, double theta,
                                       double beta2) {
  const double speed = std::hypot(u, v);
  const double cos_d = speed > 0.0 ? u / speed : 1.0;
  const double sin_d = speed > 0.0 ? v / speed : 0.0;
  const double f = beta2 * std::sqrt(std::max(theta, 0.0));
  TransportDirection out;
  if (!(f > 0.0)) {
    const double slope = std::hypot(dzdx, dzdy);
    if (slope > 0.0) {
      out.cos_a = -dzdx / slope;
      out.sin_a = -dzdy / slope;
      out.fallback = true;
    } else {
      out.cos_a = cos_d;
      out.sin_a = sin_d;
    }
    return out;
  }
  const double num = sin_d - dzdy / f;
  const double den = cos_d - dzdx / f;
  const double norm = std::hypot(num, den);
  if (norm > 0.0) {
    out.cos_a = den / norm;
    out.sin_a = num / norm;
  } else {
    out.cos_a = cos_d;
    out.sin_a = sin_d;
  }
  return out;
}

double slope_magnitude_correction(double qb, double cos_a, double sin_a, double dzdx, double dzdy,
                                  double beta, bool* clipped) {
  const double factor = 1.0 - beta * (dzdx * cos_a + dzdy * sin_a);
  if (factor < 0.0) {
    if (clipped != nullptr) *clipped = true;
    return 0.0;
  }
  if (clipped != nullptr) *clipped = false;
  return qb * factor;
}

double slope_magnitude_correction_deg(double qb, double alpha_deg, double dzdx, double dzdy,
                                      double beta, bool* clipped) {
  const double a = alpha_deg * std::numbers::pi / 180.0;
  return slope_magnitude_correction(qb, std::cos(a), std::sin(a), dzdx, dzdy, beta, clipped);
}

}  // namespace morphouq
