#include "morphouq/model/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "morphouq/errors.hpp"
#include "morphouq/model/closures.hpp"

namespace morphouq {

namespace {

// Rounding can leave a depth a few ulps below zero after an otherwise
// positive update; anything deeper is a genuine failure.
constexpr double kDepthClampTol = 1e-12;

}  // namespace

FlowState initial_state(const Grid& grid, const RunConfig& config) {
  const std::size_t n = grid.size();
  FlowState s;
  s.h.assign(n, 0.0);
  s.hu.assign(n, 0.0);
  s.hv.assign(n, 0.0);
  s.zb = grid.initial_bed();
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      if (!grid.active[k]) continue;
      if (grid.xc(i) < grid.dam_x) {
        s.h[k] = std::max(0.0, config.upstream_level - s.zb[k]);
      } else if (grid.erodible0[k] > 0.0) {
        s.h[k] = config.downstream_depth;
      }
    }
  }
  return s;
}

nlohmann::json SolverDiagnostics::to_json() const {
  return {{"steps", steps},
          {"skin_friction_saturated", skin_friction_saturated},
          {"direction_fallbacks", direction_fallbacks},
          {"slope_factor_clipped", slope_factor_clipped},
          {"limiter_activations", limiter_activations},
          {"depth_clamps", depth_clamps},
          {"min_dt", min_dt}};
}

Solver::Solver(const Grid& grid, const RunConfig& config, const MorphoParams& params)
    : grid_(grid), config_(config), params_(params) {
  hll_.g = config.phys.g;
  hll_.h_dry = config.h_dry;
  const std::size_t nx = static_cast<std::size_t>(grid.nx);
  const std::size_t ny = static_cast<std::size_t>(grid.ny);
  const std::size_t nfx = (nx - 1) * ny;
  const std::size_t nfy = nx * (ny - 1);
  for (auto* v : {&fx_mass_, &fx_left_, &fx_right_, &fx_tan_}) v->assign(nfx, 0.0);
  for (auto* v : {&fy_mass_, &fy_left_, &fy_right_, &fy_tan_}) v->assign(nfy, 0.0);
  for (auto* v : {&west_mom_, &east_mass_, &east_mom_, &east_tan_}) v->assign(ny, 0.0);
  for (auto* v : {&south_mom_, &north_mom_}) v->assign(nx, 0.0);
  for (auto* v : {&dqx_, &dqy_, &qsx_, &qsy_, &dzdx_, &dzdy_, &ratio_}) v->assign(grid.size(), 0.0);
  classify_faces();
}

void Solver::classify_faces() {
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  auto kind = [](bool l, bool r) {
    if (l && r) return kOpen;
    if (l) return kWallLeft;
    if (r) return kWallRight;
    return kClosed;
  };
  xkind_.assign(static_cast<std::size_t>((nx - 1) * ny), kClosed);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      xkind_[static_cast<std::size_t>(j * (nx - 1) + i)] =
          kind(grid_.active[grid_.index(i, j)], grid_.active[grid_.index(i + 1, j)]);
    }
  }
  ykind_.assign(static_cast<std::size_t>(nx * (ny - 1)), kClosed);
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      ykind_[static_cast<std::size_t>(j * nx + i)] =
          kind(grid_.active[grid_.index(i, j)], grid_.active[grid_.index(i, j + 1)]);
    }
  }
}

double Solver::compute_dt(const FlowState& s) const {
  const double g = config_.phys.g;
  const double h_dry = config_.h_dry;
  const double idx = 1.0 / grid_.dx;
  const double idy = 1.0 / grid_.dy;
  double smax = 0.0;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    const double h = s.h[k];
    if (!grid_.active[k] || h <= h_dry) continue;
    const double c = std::sqrt(g * h);
    const double rate = (std::abs(s.hu[k] / h) + c) * idx + (std::abs(s.hv[k] / h) + c) * idy;
    smax = std::max(smax, rate);
  }
  const double dt = smax > 0.0 ? config_.time.cfl / smax : config_.time.dt_max;
  return std::min(dt, config_.time.dt_max);
}

double Solver::step_hydro(FlowState& s, double dt) {
  const simd::KernelTable& kern = simd::active_kernels();
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  const std::size_t snx = static_cast<std::size_t>(nx);
  double* h = s.h.data();
  double* hu = s.hu.data();
  double* hv = s.hv.data();
  const double* z = s.zb.data();

  // Interior faces, vectorised along rows.
  if (nx > 1) {
    for (int j = 0; j < ny; ++j) {
      const std::size_t base = static_cast<std::size_t>(j) * snx;
      const std::size_t fb = static_cast<std::size_t>(j) * (snx - 1);
      simd::FaceSide l{h + base, hu + base, hv + base, z + base};
      simd::FaceSide r{h + base + 1, hu + base + 1, hv + base + 1, z + base + 1};
      simd::FaceFlux out{fx_mass_.data() + fb, fx_left_.data() + fb, fx_right_.data() + fb,
                         fx_tan_.data() + fb};
      kern.hll_faces(snx - 1, l, r, out, hll_);
    }
  }
  for (int j = 0; j + 1 < ny; ++j) {
    const std::size_t base = static_cast<std::size_t>(j) * snx;
    simd::FaceSide l{h + base, hv + base, hu + base, z + base};
    simd::FaceSide r{h + base + snx, hv + base + snx, hu + base + snx, z + base + snx};
    simd::FaceFlux out{fy_mass_.data() + base, fy_left_.data() + base, fy_right_.data() + base,
                       fy_tan_.data() + base};
    kern.hll_faces(snx, l, r, out, hll_);
  }

  // Reflective walls: the ghost state mirrors the normal discharge.
  double mass = 0.0;
  double tan = 0.0;
  double ml = 0.0;
  double mr = 0.0;
  auto wall_on_right = [&](std::size_t k, double qn, double qt) {
    simd::hll_face(h[k], qn, qt, z[k], h[k], -qn, qt, z[k], hll_, mass, ml, mr, tan);
    return ml;
  };
  auto wall_on_left = [&](std::size_t k, double qn, double qt) {
    simd::hll_face(h[k], -qn, qt, z[k], h[k], qn, qt, z[k], hll_, mass, ml, mr, tan);
    return mr;
  };
  for (std::size_t f = 0; f < xkind_.size(); ++f) {
    const FaceKind fk = xkind_[f];
    if (fk == kOpen) continue;
    const std::size_t j = f / (snx - 1);
    const std::size_t kl = j * snx + f % (snx - 1);
    fx_mass_[f] = 0.0;
    fx_tan_[f] = 0.0;
    fx_left_[f] = fk == kWallLeft ? wall_on_right(kl, hu[kl], hv[kl]) : 0.0;
    fx_right_[f] = fk == kWallRight ? wall_on_left(kl + 1, hu[kl + 1], hv[kl + 1]) : 0.0;
  }
  for (std::size_t f = 0; f < ykind_.size(); ++f) {
    const FaceKind fk = ykind_[f];
    if (fk == kOpen) continue;
    fy_mass_[f] = 0.0;
    fy_tan_[f] = 0.0;
    fy_left_[f] = fk == kWallLeft ? wall_on_right(f, hv[f], hu[f]) : 0.0;
    fy_right_[f] = fk == kWallRight ? wall_on_left(f + snx, hv[f + snx], hu[f + snx]) : 0.0;
  }
  for (int j = 0; j < ny; ++j) {
    const std::size_t kw = grid_.index(0, j);
    const std::size_t ke = grid_.index(nx - 1, j);
    const std::size_t js = static_cast<std::size_t>(j);
    west_mom_[js] = grid_.active[kw] ? wall_on_left(kw, hu[kw], hv[kw]) : 0.0;
    east_mass_[js] = 0.0;
    east_tan_[js] = 0.0;
    east_mom_[js] = 0.0;
    if (!grid_.active[ke]) continue;
    if (grid_.east_outflow) {
      simd::hll_face(h[ke], hu[ke], hv[ke], z[ke], h[ke], hu[ke], hv[ke], z[ke], hll_, mass, ml,
                     mr, tan);
      east_mass_[js] = mass;
      east_mom_[js] = ml;
      east_tan_[js] = tan;
    } else {
      east_mom_[js] = wall_on_right(ke, hu[ke], hv[ke]);
    }
  }
  for (int i = 0; i < nx; ++i) {
    const std::size_t ks = grid_.index(i, 0);
    const std::size_t kn = grid_.index(i, ny - 1);
    const std::size_t is = static_cast<std::size_t>(i);
    south_mom_[is] = grid_.active[ks] ? wall_on_left(ks, hv[ks], hu[ks]) : 0.0;
    north_mom_[is] = grid_.active[kn] ? wall_on_right(kn, hv[kn], hu[kn]) : 0.0;
  }

  // Eddy-viscosity diffusion of momentum from the pre-step velocities.
  const double nu = config_.phys.nu;
  const double h_dry = config_.h_dry;
  const bool diffuse = nu > 0.0;
  if (diffuse) {
    std::fill(dqx_.begin(), dqx_.end(), 0.0);
    std::fill(dqy_.begin(), dqy_.end(), 0.0);
    auto face = [&](std::size_t a, std::size_t b, double spacing) {
      if (h[a] <= h_dry || h[b] <= h_dry) return;
      const double hf = 0.5 * (h[a] + h[b]);
      const double k = nu * hf / spacing;
      const double fu = k * (hu[b] / h[b] - hu[a] / h[a]);
      const double fv = k * (hv[b] / h[b] - hv[a] / h[a]);
      const double ca = dt / (spacing * grid_.area_factor[a]);
      const double cb = dt / (spacing * grid_.area_factor[b]);
      dqx_[a] += ca * fu;
      dqy_[a] += ca * fv;
      dqx_[b] -= cb * fu;
      dqy_[b] -= cb * fv;
    };
    for (std::size_t f = 0; f < xkind_.size(); ++f) {
      if (xkind_[f] != kOpen) continue;
      const std::size_t kl = (f / (snx - 1)) * snx + f % (snx - 1);
      face(kl, kl + 1, grid_.dx);
    }
    for (std::size_t f = 0; f < ykind_.size(); ++f) {
      if (ykind_[f] == kOpen) face(f, f + snx, grid_.dy);
    }
  }

  double outflow = 0.0;
  const double g = config_.phys.g;
  const double n2 = config_.phys.manning_n * config_.phys.manning_n;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = grid_.index(i, j);
      if (!grid_.active[k]) continue;
      const double af = grid_.area_factor[k];
      const double cx = dt / (grid_.dx * af);
      const double cy = dt / (grid_.dy * af);
      double mE, nE, tE, mW, nW, tW, mN, nN, tN, mS, nS, tS;
      const std::size_t js = static_cast<std::size_t>(j);
      const std::size_t is = static_cast<std::size_t>(i);
      if (i + 1 < nx) {
        const std::size_t f = js * (snx - 1) + is;
        mE = fx_mass_[f];
        nE = fx_left_[f];
        tE = fx_tan_[f];
      } else {
        mE = east_mass_[js];
        nE = east_mom_[js];
        tE = east_tan_[js];
        outflow += mE * grid_.dy * dt;
      }
      if (i > 0) {
        const std::size_t f = js * (snx - 1) + is - 1;
        mW = fx_mass_[f];
        nW = fx_right_[f];
        tW = fx_tan_[f];
      } else {
        mW = 0.0;
        nW = west_mom_[js];
        tW = 0.0;
      }
      if (j + 1 < ny) {
        const std::size_t f = js * snx + is;
        mN = fy_mass_[f];
        nN = fy_left_[f];
        tN = fy_tan_[f];
      } else {
        mN = 0.0;
        nN = north_mom_[is];
        tN = 0.0;
      }
      if (j > 0) {
        const std::size_t f = (js - 1) * snx + is;
        mS = fy_mass_[f];
        nS = fy_right_[f];
        tS = fy_tan_[f];
      } else {
        mS = 0.0;
        nS = south_mom_[is];
        tS = 0.0;
      }

      double hn = h[k] - cx * (mE - mW) - cy * (mN - mS);
      double qx = hu[k] - cx * (nE - nW) - cy * (tN - tS);
      double qy = hv[k] - cx * (tE - tW) - cy * (nN - nS);
      if (diffuse) {
        qx += dqx_[k];
        qy += dqy_[k];
      }
      if (!(hn >= 0.0)) {
        if (hn > -kDepthClampTol) {
          hn = 0.0;
          ++diag_.depth_clamps;
        } else {
          std::ostringstream msg;
          msg << "depth " << hn << " in cell (" << i << ", " << j << ") at t = " << s.t + dt;
          throw SolverError(msg.str());
        }
      }
      if (hn <= h_dry) {
        qx = 0.0;
        qy = 0.0;
      } else if (n2 > 0.0) {
        const double speed = std::hypot(qx, qy) / hn;
        const double rate = g * n2 * speed / (hn * std::cbrt(hn));
        const double damp = std::exp(-rate * dt);
        qx *= damp;
        qy *= damp;
      }
      if (!std::isfinite(qx) || !std::isfinite(qy)) {
        std::ostringstream msg;
        msg << "non-finite discharge in cell (" << i << ", " << j << ") at t = " << s.t + dt;
        throw SolverError(msg.str());
      }
      h[k] = hn;
      hu[k] = qx;
      hv[k] = qy;
    }
  }
  s.t += dt;
  ++diag_.steps;
  if (diag_.min_dt == 0.0 || dt < diag_.min_dt) diag_.min_dt = dt;
  return outflow;
}

void Solver::bed_slopes(const FlowState& s) {
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  const double* z = s.zb.data();
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = grid_.index(i, j);
      if (!grid_.active[k]) {
        dzdx_[k] = 0.0;
        dzdy_[k] = 0.0;
        continue;
      }
      const bool e = i + 1 < nx && grid_.active[k + 1];
      const bool w = i > 0 && grid_.active[k - 1];
      if (e && w) {
        dzdx_[k] = (z[k + 1] - z[k - 1]) / (2.0 * grid_.dx);
      } else if (e) {
        dzdx_[k] = (z[k + 1] - z[k]) / grid_.dx;
      } else if (w) {
        dzdx_[k] = (z[k] - z[k - 1]) / grid_.dx;
      } else {
        dzdx_[k] = 0.0;
      }
      const std::size_t up = k + static_cast<std::size_t>(nx);
      const std::size_t dn = k - static_cast<std::size_t>(nx);
      const bool n = j + 1 < ny && grid_.active[up];
      const bool so = j > 0 && grid_.active[dn];
      if (n && so) {
        dzdy_[k] = (z[up] - z[dn]) / (2.0 * grid_.dy);
      } else if (n) {
        dzdy_[k] = (z[up] - z[k]) / grid_.dy;
      } else if (so) {
        dzdy_[k] = (z[k] - z[dn]) / grid_.dy;
      } else {
        dzdy_[k] = 0.0;
      }
    }
  }
}

double Solver::step_exner(FlowState& s, double dt) {
  const int nx = grid_.nx;
  const int ny = grid_.ny;
  const std::size_t snx = static_cast<std::size_t>(nx);
  const PhysicalConstants& ph = config_.phys;
  const double h_dry = config_.h_dry;
  const double s_rel = ph.relative_density();
  const double solid = 1.0 - params_.porosity;

  bed_slopes(s);
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    qsx_[k] = 0.0;
    qsy_[k] = 0.0;
    const double h = s.h[k];
    if (!grid_.active[k] || h <= h_dry) continue;
    const double u = s.hu[k] / h;
    const double v = s.hv[k] / h;
    const double speed2 = u * u + v * v;
    if (speed2 == 0.0) continue;
    const double cf = friction_coefficient(h, ph.manning_n, ph.g);
    if (cf == 0.0) continue;
    const double tau_b = 0.5 * ph.rho * cf * speed2;
    bool saturated = false;
    const double tau =
        skin_friction_shear(tau_b, h, params_.alpha_ks, ph.d50, ph.kappa, cf, &saturated);
    if (saturated) ++diag_.skin_friction_saturated;
    const double theta = shields_number(tau, ph.rho_s, ph.rho, ph.d50, ph.g);
    const double qb = mpm_transport_rate(theta, params_.alpha_mpm, params_.theta_cr, s_rel, ph.d50,
                                         ph.g);
    if (qb == 0.0) continue;
    const TransportDirection dir =
        transport_direction(u, v, dzdx_[k], dzdy_[k], theta, params_.beta2);
    if (dir.fallback) ++diag_.direction_fallbacks;
    bool clipped = false;
    const double q = slope_magnitude_correction(qb, dir.cos_a, dir.sin_a, dzdx_[k], dzdy_[k],
                                                params_.beta, &clipped);
    if (clipped) ++diag_.slope_factor_clipped;
    qsx_[k] = q * dir.cos_a;
    qsy_[k] = q * dir.sin_a;
  }

  auto x_open = [&](int i, int j) {  // face east of cell (i, j)
    if (i + 1 < nx) return xkind_[static_cast<std::size_t>(j) * (snx - 1) + i] == kOpen;
    return grid_.east_outflow;
  };
  auto y_open = [&](int i, int j) {  // face north of cell (i, j)
    if (j + 1 < ny) return ykind_[static_cast<std::size_t>(j) * snx + i] == kOpen;
    return false;
  };

  // Limit each cell's outgoing flux to the sediment it holds.
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = grid_.index(i, j);
      ratio_[k] = 1.0;
      if (!grid_.active[k]) continue;
      double out = 0.0;
      if (qsx_[k] > 0.0 && x_open(i, j)) out += qsx_[k] * grid_.dy;
      if (qsx_[k] < 0.0 && i > 0 && x_open(i - 1, j)) out -= qsx_[k] * grid_.dy;
      if (qsy_[k] > 0.0 && y_open(i, j)) out += qsy_[k] * grid_.dx;
      if (qsy_[k] < 0.0 && j > 0 && y_open(i, j - 1)) out -= qsy_[k] * grid_.dx;
      out *= dt;
      if (out <= 0.0) continue;
      const double avail = solid * std::max(0.0, s.zb[k] - grid_.z_fixed[k]) * grid_.cell_area(k);
      if (out > avail) {
        ratio_[k] = avail / out;
        if (avail > 0.0) ++diag_.limiter_activations;
      }
    }
  }

  auto xflux = [&](int i, int j) {  // flux through the face east of (i, j)
    const std::size_t k = grid_.index(i, j);
    if (!x_open(i, j)) return 0.0;
    const double from_left = ratio_[k] * std::max(qsx_[k], 0.0);
    if (i + 1 == nx) return from_left;
    return from_left + ratio_[k + 1] * std::min(qsx_[k + 1], 0.0);
  };
  auto yflux = [&](int i, int j) {  // flux through the face north of (i, j)
    const std::size_t k = grid_.index(i, j);
    if (!y_open(i, j)) return 0.0;
    return ratio_[k] * std::max(qsy_[k], 0.0) + ratio_[k + snx] * std::min(qsy_[k + snx], 0.0);
  };

  double outflow = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const std::size_t k = grid_.index(i, j);
      if (!grid_.active[k]) continue;
      const double fe = xflux(i, j);
      const double fw = i > 0 ? xflux(i - 1, j) : 0.0;
      const double fn = yflux(i, j);
      const double fs = j > 0 ? yflux(i, j - 1) : 0.0;
      if (i + 1 == nx) outflow += fe * grid_.dy * dt;
      const double net = (fe - fw) * grid_.dy + (fn - fs) * grid_.dx;
      if (net == 0.0) continue;
      double zn = s.zb[k] - dt * net / (solid * grid_.cell_area(k));
      if (zn < grid_.z_fixed[k]) zn = grid_.z_fixed[k];
      s.zb[k] = zn;
    }
  }
  return outflow;
}

double Solver::water_volume(const FlowState& s) const {
  double v = 0.0;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    if (grid_.active[k]) v += s.h[k] * grid_.cell_area(k);
  }
  return v;
}

double Solver::bed_volume(const FlowState& s) const {
  double v = 0.0;
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    if (grid_.active[k]) v += (s.zb[k] - grid_.z_fixed[k]) * grid_.cell_area(k);
  }
  return v;
}

void step_hydro(FlowState& state, const Grid& grid, const RunConfig& config, double dt) {
  Solver solver(grid, config, config.params);
  solver.step_hydro(state, dt);
}

void step_exner(FlowState& state, const Grid& grid, const MorphoParams& params,
                const RunConfig& config, double dt) {
  Solver solver(grid, config, params);
  solver.step_exner(state, dt);
}

}  // namespace morphouq
