#include <doctest.h>

#include <cmath>
#include <numbers>

#include "morphouq/model/closures.hpp"
#include "morphouq/rng.hpp"

using namespace morphouq;

namespace {

constexpr double kG = 9.81;

// Direct evaluations of the closure formulas, written independently of the library.
double oracle_cf(double h, double n) { return 2.0 * kG * n * n * std::pow(h, -1.0 / 3.0); }
double oracle_skin_cf(double h, double alpha_ks, double d50, double kappa) {
  const double denom = std::log(11.036 * h / (alpha_ks * d50));
  return 2.0 * std::pow(kappa / denom, 2.0);
}
double oracle_shields(double tau, double rho_s, double rho, double d50) {
  return tau / ((rho_s - rho) * kG * d50);
}
double oracle_qb(double theta, double a, double theta_cr, double s, double d50) {
  if (theta < theta_cr) return 0.0;
  return a * std::pow(theta - theta_cr, 1.5) * std::sqrt((s - 1.0) * kG * std::pow(d50, 3.0));
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("friction coefficient") {
  const double cf = friction_coefficient(0.47, 0.0165);
  CHECK(rel(cf, oracle_cf(0.47, 0.0165)) < 1e-12);
  CHECK(cf == doctest::Approx(6.870e-3).epsilon(5e-4));
  CHECK(friction_coefficient(0.3, 0.0) == 0.0);
  CHECK(friction_coefficient(0.235, 0.0165) / cf == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));
}

TEST_CASE("bed shear stress") {
  const Vec2 t = bed_shear_stress(1.0, 0.0, 0.01, 1000.0);
  CHECK(t.x == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(t.y == 0.0);
  const Vec2 zero = bed_shear_stress(0.0, 0.0, 0.01, 1000.0);
  CHECK(zero.x == 0.0);
  CHECK(zero.y == 0.0);

  Rng rng = make_rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double u = 4.0 * uniform01(rng) - 2.0;
    const double v = 4.0 * uniform01(rng) - 2.0;
    const Vec2 a = bed_shear_stress(u, v, 0.005, 1000.0);
    const Vec2 b = bed_shear_stress(-v, u, 0.005, 1000.0);
    CHECK(b.x == doctest::Approx(-a.y).epsilon(1e-12));
    CHECK(b.y == doctest::Approx(a.x).epsilon(1e-12));
  }
}

TEST_CASE("skin friction") {
  const double cf = friction_coefficient(0.085, 0.0165);
  const double cfp = skin_friction_coefficient(0.085, 3.0, 1.61e-3, 0.4, cf);
  CHECK(rel(cfp, oracle_skin_cf(0.085, 3.0, 1.61e-3, 0.4)) < 1e-12);
  CHECK(cfp == doctest::Approx(1.153e-2).epsilon(5e-4));
  CHECK(skin_friction_coefficient(0.085, 6.0, 1.61e-3, 0.4, cf) > cfp);
  CHECK(skin_friction_shear(2.5, 0.085, 3.0, 1.61e-3, 0.4, cfp) == doctest::Approx(2.5).epsilon(1e-14));
  bool saturated = false;
  CHECK(skin_friction_coefficient(1e-5, 3.0, 1.61e-3, 0.4, cf, &saturated) == cf);
  CHECK(saturated);
}

TEST_CASE("shields number") {
  const double theta = shields_number(1.0, 2630.0, 1000.0, 1.61e-3);
  CHECK(rel(theta, oracle_shields(1.0, 2630.0, 1000.0, 1.61e-3)) < 1e-12);
  CHECK(theta == doctest::Approx(0.03884).epsilon(1e-4));
  CHECK(shields_number(0.0, 2630.0, 1000.0, 1.61e-3) == 0.0);
  CHECK(shields_number(3.0, 2630.0, 1000.0, 1.61e-3) == doctest::Approx(3.0 * theta).epsilon(1e-14));
}

TEST_CASE("Meyer-Peter Mueller transport") {
  CHECK(mpm_transport_rate(0.02, 8.0, 0.047, 2.63, 1.61e-3) == 0.0);
  const double qb = mpm_transport_rate(0.147, 8.0, 0.047, 2.63, 1.61e-3);
  CHECK(rel(qb, oracle_qb(0.147, 8.0, 0.047, 2.63, 1.61e-3)) < 1e-12);
  CHECK(qb == doctest::Approx(6.535e-5).epsilon(2e-4));
  CHECK(mpm_transport_rate(0.047, 8.0, 0.047, 2.63, 1.61e-3) == 0.0);
  CHECK(mpm_transport_rate(0.047 + 1e-12, 8.0, 0.047, 2.63, 1.61e-3) < 1e-20);
}

TEST_CASE("transport direction") {
  const TransportDirection flat = transport_direction(0.6, 0.8, 0.0, 0.0, 0.3, 0.85);
  CHECK(flat.degrees() == doctest::Approx(std::atan2(0.8, 0.6) * 180.0 / std::numbers::pi));

  const TransportDirection d = transport_direction(1.0, 0.0, 0.0, 0.1, 0.25, 0.85);
  const double expected = std::atan(-0.1 / (0.85 * 0.5)) * 180.0 / std::numbers::pi;
  CHECK(rel(d.degrees(), expected) < 1e-12);
  CHECK(d.degrees() == doctest::Approx(-13.24).epsilon(1e-3));

  Rng rng = make_rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double sx = 0.2 * uniform01(rng) - 0.1;
    const double sy = 0.2 * uniform01(rng) - 0.1;
    const double theta = 0.05 + uniform01(rng);
    const TransportDirection a = transport_direction(u, v, sx, sy, theta, 0.85);
    const TransportDirection b = transport_direction(u, -v, sx, -sy, theta, 0.85);
    CHECK(b.degrees() == doctest::Approx(-a.degrees()).epsilon(1e-10));
  }
}

TEST_CASE("slope magnitude correction") {
  CHECK(slope_magnitude_correction_deg(2e-5, 30.0, 0.0, 0.0, 1.3) == 2e-5);
  CHECK(slope_magnitude_correction_deg(2e-5, 30.0, 0.05, -0.02, 0.0) == 2e-5);
  const double q = slope_magnitude_correction_deg(1e-4, 0.0, -0.1, 0.0, 1.3);
  CHECK(rel(q, 1.13e-4) < 1e-12);
  bool clipped = false;
  CHECK(slope_magnitude_correction_deg(1e-4, 0.0, 1.0, 0.0, 1.3, &clipped) == 0.0);
  CHECK(clipped);
}

TEST_CASE("closures rotate with the flow") {
  // Rotating velocity and bed gradient together rotates the transport vector.
  Rng rng = make_rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const double u = 2.0 * uniform01(rng) - 1.0;
    const double v = 2.0 * uniform01(rng) - 1.0;
    const double sx = 0.1 * uniform01(rng) - 0.05;
    const double sy = 0.1 * uniform01(rng) - 0.05;
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double theta = 0.1 + uniform01(rng);
    const auto vec = [&](double uu, double vv, double gx, double gy) {
      const TransportDirection d = transport_direction(uu, vv, gx, gy, theta, 0.85);
      const double q = slope_magnitude_correction(1.0, d.cos_a, d.sin_a, gx, gy, 1.3);
      return Vec2{q * d.cos_a, q * d.sin_a};
    };
    const Vec2 a = vec(u, v, sx, sy);
    const Vec2 b = vec(c * u - s * v, s * u + c * v, c * sx - s * sy, s * sx + c * sy);
    CHECK(b.x == doctest::Approx(c * a.x - s * a.y).epsilon(1e-9));
    CHECK(b.y == doctest::Approx(s * a.x + c * a.y).epsilon(1e-9));
  }
}
