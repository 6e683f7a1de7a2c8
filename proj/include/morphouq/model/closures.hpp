#pragma once
// Pointwise closures of the bedload model. All quantities are SI.

namespace morphouq {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Manning drag coefficient C_f = 2 g n^2 / h^(1/3). Callers must not pass dry depths.
double friction_coefficient(double h, double manning_n, double g = 9.81);

/// Bed shear stress 0.5 rho C_f |U| U.
Vec2 bed_shear_stress(double u, double v, double cf, double rho);

/// Skin-friction coefficient 2 (kappa / ln(11.036 h / k_s))^2 with k_s = alpha_ks d50.
/// Returns `cf` and sets `*saturated` when the log argument is not above one.
double skin_friction_coefficient(double h, double alpha_ks, double d50, double kappa, double cf,
                                 bool* saturated = nullptr);

/// Grain shear stress (C'_f / C_f) |tau_b|; zero when |tau_b| or C_f is zero.
double skin_friction_shear(double tau_b, double h, double alpha_ks, double d50, double kappa,
                           double cf, bool* saturated = nullptr);

/// theta = tau / (g (rho_s - rho) d50).
double shields_number(double tau, double rho_s, double rho, double d50, double g = 9.81);

/// Meyer-Peter and Mueller rate alpha (theta - theta_cr)^1.5 sqrt(g (s - 1) d50^3), zero below threshold.
double mpm_transport_rate(double theta, double alpha_mpm, double theta_cr, double s, double d50,
                          double g = 9.81);

/// Bedload direction after the transverse-slope deviation.
struct TransportDirection {
  double cos_a = 1.0;
  double sin_a = 0.0;
  /// Weighting f(theta) vanished on a sloping bed: steepest descent was used.
  bool fallback = false;

  double degrees() const;
};

/// tan(alpha) = (sin d - dz/dy / f) / (cos d - dz/dx / f), d the flow direction
/// and f = beta2 sqrt(theta); the quadrant follows numerator and denominator.
TransportDirection transport_direction(double u, double v, double dzdx, double dzdy, double theta,
                                       double beta2);

/// q_b [1 - beta (dz/dx cos a + dz/dy sin a)], clipped at zero (sets `*clipped`).
double slope_magnitude_correction(double qb, double cos_a, double sin_a, double dzdx, double dzdy,
                                  double beta, bool* clipped = nullptr);
/// Same with the direction given in degrees.
double slope_magnitude_correction_deg(double qb, double alpha_deg, double dzdx, double dzdy,
                                      double beta, bool* clipped = nullptr);

}  // namespace morphouq
