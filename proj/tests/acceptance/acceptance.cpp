// Acceptance checks. Each criterion prints one "AC<n> PASS|FAIL" line followed
// by indented detail lines; the exit status is nonzero when any selected
// criterion fails.
//
//   acceptance <n|all> --work DIR --cli PATH --config desk.json --tiny tiny.json

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "morphouq/bayes/diagnostics.hpp"
#include "morphouq/bayes/posterior.hpp"
#include "morphouq/bayes/sampler.hpp"
#include "morphouq/domain/config.hpp"
#include "morphouq/domain/geometry.hpp"
#include "morphouq/domain/grid.hpp"
#include "morphouq/emulator/mlp.hpp"
#include "morphouq/model/closures.hpp"
#include "morphouq/model/simulation.hpp"
#include "morphouq/model/solver.hpp"
#include "morphouq/pipeline/manifest.hpp"
#include "morphouq/pipeline/workflow.hpp"
#include "morphouq/rng.hpp"
#include "morphouq/sensitivity/borgonovo.hpp"
#include "morphouq/sensitivity/field.hpp"
#include "morphouq/uq/dataset.hpp"

namespace fs = std::filesystem;
using namespace morphouq;

namespace {

struct Paths {
  fs::path work;
  fs::path cli;
  fs::path config;
  fs::path tiny;
};

class Report {
 public:
  void check(bool ok, const char* fmt, ...) __attribute__((format(printf, 3, 4))) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, args);
    va_end(args);
    lines_.push_back(std::string(ok ? "ok   " : "FAIL ") + buf);
    pass_ = pass_ && ok;
  }
  void note(const std::string& s) { lines_.push_back("     " + s); }
  bool pass() const { return pass_; }
  const std::vector<std::string>& lines() const { return lines_; }

 private:
  bool pass_ = true;
  std::vector<std::string> lines_;
};

double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Solver oracles ---------------------------------------------------------

/// Flat frictionless channel with a dam at x = 5 m, fixed bed.
struct DamBreak {
  Grid grid;
  RunConfig config;
  FlowState state;
};

DamBreak dam_break(double h0, double h1, double dx) {
  DamBreak d;
  const int nx = static_cast<int>(std::lround(12.0 / dx));
  d.grid = make_box_grid(nx, 3, dx, dx);
  d.grid.dam_x = 5.0;
  d.config.phys.manning_n = 0.0;
  d.config.morphodynamics = false;
  d.config.upstream_level = h0;
  d.config.dx = d.config.dy = dx;
  d.state = initial_state(d.grid, d.config);
  for (int j = 0; j < d.grid.ny; ++j) {
    for (int i = 0; i < d.grid.nx; ++i) {
      if (d.grid.xc(i) >= d.grid.dam_x) d.state.h[d.grid.index(i, j)] = h1;
    }
  }
  return d;
}

void advance(DamBreak& d, double t_end) {
  Solver solver(d.grid, d.config, d.config.params);
  while (d.state.t < t_end - 1e-12) {
    const double dt = std::min(solver.compute_dt(d.state), t_end - d.state.t);
    solver.step_hydro(d.state, dt);
  }
}

/// Middle-state depth of the wet dam break from the shock and rarefaction
/// relations, by bisection.
double stoker_depth(double h0, double h1, double g) {
  auto f = [&](double hm) {
    return 2.0 * (std::sqrt(g * h0) - std::sqrt(g * hm)) -
           (hm - h1) * std::sqrt(g * (hm + h1) / (2.0 * hm * h1));
  };
  double lo = h1;
  double hi = h0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void ac1(const Paths&, Report& rep) {
  {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig c;
    c.geometry = "full";
    c.dx = c.dy = 0.2;
    const Grid g = grid_for(c);
    FlowState s = initial_state(g, c);
    for (std::size_t k = 0; k < g.size(); ++k) s.h[k] = g.active[k] ? std::max(0.0, 0.47 - s.zb[k]) : 0.0;
    const FlowState s0 = s;
    Solver solver(g, c, c.params);
    for (int n = 0; n < 100; ++n) solver.step_hydro(s, 0.01);
    double worst = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
      worst = std::max({worst, std::abs(s.h[k] - s0.h[k]), std::abs(s.hu[k]), std::abs(s.hv[k])});
    }
    rep.check(worst < 1e-12 && seconds_since(t0) < 120.0,
              "lake at rest, full bathymetry, 100 steps: max change %.3e (tol 1e-12), %.1f s", worst,
              seconds_since(t0));
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    const double h0 = 0.47;
    const double exact = 2.0 * std::sqrt(RunConfig{}.phys.g * h0);
    std::ostringstream trend;
    double speed = 0.0;
    for (double dx : {0.1, 0.05, 0.025}) {
      const auto ts = std::chrono::steady_clock::now();
      DamBreak d = dam_break(h0, 0.0, dx);
      advance(d, 1.0);
      // Front: downstream edge of the last cell the solver treats as wet.
      double front = d.grid.dam_x;
      for (int i = 0; i < d.grid.nx; ++i) {
        if (d.state.h[d.grid.index(i, 1)] > d.config.h_dry) front = std::max(front, d.grid.xc(i) + 0.5 * dx);
      }
      const double v = front - d.grid.dam_x;
      trend << "dx " << dx << ": " << v << " m/s; ";
      if (dx == 0.05) {
        speed = v;
        rep.check(rel_err(speed, exact) < 0.05 && seconds_since(ts) < 120.0,
                  "dry dam break front speed at dx=0.05: %.4f m/s vs %.4f (error %.2f%%, tol 5%%), %.1f s", speed,
                  exact, 100.0 * rel_err(speed, exact), seconds_since(ts));
      }
    }
    rep.note("front speed under refinement: " + trend.str() + std::to_string(seconds_since(t0)) + " s");
  }
  {
    const auto t0 = std::chrono::steady_clock::now();
    const double h0 = 0.47;
    const double h1 = 0.085;
    const double t = 1.0;
    DamBreak d = dam_break(h0, h1, 0.05);
    advance(d, t);
    const double g = d.config.phys.g;
    const double hm = stoker_depth(h0, h1, g);
    const double um = 2.0 * (std::sqrt(g * h0) - std::sqrt(g * hm));
    const double shock = hm * um / (hm - h1);
    const double x = d.grid.dam_x + 0.5 * ((um - std::sqrt(g * hm)) + shock) * t;
    const auto k = d.grid.locate(x, d.grid.yc(1));
    const double h = k ? d.state.h[*k] : std::nan("");
    rep.check(rel_err(h, hm) < 0.02 && seconds_since(t0) < 120.0,
              "wet dam break middle depth at x=%.3f: %.5f m vs %.5f (error %.2f%%, tol 2%%), %.1f s", x, h, hm,
              100.0 * rel_err(h, hm), seconds_since(t0));
  }
}

// 2. Conservation -------------------------------------------------------------

void ac2(const Paths& p, Report& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  RunConfig c = load_config(p.config);
  c.time.t_end = 20.0;
  const Grid g = grid_for(c);
  const SimulationResult r = run_simulation(g, c, c.params);
  rep.check(r.ok, "20 s mobile-bed run at dx=%.2f completed%s", c.dx, r.ok ? "" : (": " + r.failure).c_str());
  const double water = r.ledger.water_error();
  const double sediment =
      r.ledger.sediment_error(c.params.porosity) / analytic_sediment_volume(FlumeGeometry::preset(c.geometry));
  rep.check(water < 1e-10, "water ledger relative error %.3e (tol 1e-10)", water);
  rep.check(sediment < 1e-10, "sediment ledger relative error %.3e (tol 1e-10)", sediment);
  rep.check(seconds_since(t0) < 300.0, "runtime %.1f s (limit 300 s)", seconds_since(t0));
}

// 3. Closures -------------------------------------------------------------------

void ac3(const Paths&, Report& rep) {
  const double g = 9.81;
  struct Case {
    const char* name;
    double library;
    double direct;
    double printed;
    double printed_tol;
  };
  const double cf = friction_coefficient(0.47, 0.0165);
  const double cf_skin = skin_friction_coefficient(0.085, 3.0, 1.61e-3, 0.4, friction_coefficient(0.085, 0.0165));
  const double theta = shields_number(1.0, 2630.0, 1000.0, 1.61e-3);
  const double qb = mpm_transport_rate(0.147, 8.0, 0.047, 2.63, 1.61e-3);
  const double factor = slope_magnitude_correction_deg(1.0, 0.0, -0.1, 0.0, 1.3);
  const std::vector<Case> cases = {
      {"C_f", cf, 2.0 * g * 0.0165 * 0.0165 / std::cbrt(0.47), 6.870e-3, 0.5e-6},
      {"C'_f", cf_skin, 2.0 * std::pow(0.4 / std::log(11.036 * 0.085 / (3.0 * 1.61e-3)), 2.0), 1.153e-2, 0.5e-5},
      {"theta", theta, 1.0 / (g * (2630.0 - 1000.0) * 1.61e-3), 0.03884, 0.5e-5},
      {"q_b", qb, 8.0 * std::pow(0.1, 1.5) * std::sqrt(g * 1.63 * std::pow(1.61e-3, 3.0)), 6.535e-5, 0.5e-8},
      {"slope factor", factor, 1.0 - 1.3 * (-0.1), 1.13, 0.5e-2},
  };
  for (const Case& c : cases) {
    rep.check(rel_err(c.library, c.direct) < 1e-6, "%s library %.10g vs direct %.10g (relative %.1e, tol 1e-6)",
              c.name, c.library, c.direct, rel_err(c.library, c.direct));
    rep.check(std::abs(c.direct - c.printed) <= c.printed_tol, "%s direct %.6g rounds to %.6g", c.name, c.direct,
              c.printed);
  }
}

// 4. Borgonovo estimator --------------------------------------------------------

/// delta_1 for Y = Z1 + Z2 with Z uniform on [0, 1], by nested midpoint quadrature.
double sum_of_uniforms_delta() {
  auto fy = [](double y) { return y < 0.0 || y > 2.0 ? 0.0 : (y <= 1.0 ? y : 2.0 - y); };
  const int nz = 4000;
  const int ny = 8000;
  double outer = 0.0;
  for (int a = 0; a < nz; ++a) {
    const double z = (a + 0.5) / nz;
    double inner = 0.0;
    for (int b = 0; b < ny; ++b) {
      const double y = 2.0 * (b + 0.5) / ny;
      const double cond = y >= z && y <= z + 1.0 ? 1.0 : 0.0;
      inner += std::abs(fy(y) - cond) * (2.0 / ny);
    }
    outer += inner / nz;
  }
  return 0.5 * outer;
}

void ac4(const Paths&, Report& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  const double oracle = sum_of_uniforms_delta();
  {
    const std::size_t n = 100000;
    Rng rng = make_rng(401);
    std::vector<double> x(n * 2);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[2 * i] = uniform01(rng);
      x[2 * i + 1] = uniform01(rng);
      y[i] = x[2 * i] + x[2 * i + 1];
    }
    const DeltaResult r = borgonovo_delta({x.data(), n, 2}, y);
    rep.check(std::abs(r.delta[0] - oracle) < 0.02, "Y=Z1+Z2, N=1e5: delta_1 %.4f vs quadrature %.4f (tol 0.02)",
              r.delta[0], oracle);
  }
  {
    const std::size_t n = 10000;
    Rng rng = make_rng(402);
    std::vector<double> x(n * 3);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < 3; ++c) x[3 * i + c] = uniform01(rng);
      y[i] = x[3 * i] + x[3 * i + 1];
    }
    const DeltaResult r = borgonovo_delta({x.data(), n, 3}, y);
    rep.check(r.delta[2] < 0.05, "independent input, N=1e4: delta %.4f (tol 0.05)", r.delta[2]);

    for (int kind = 0; kind < 2; ++kind) {
      std::vector<double> moved = x;
      for (std::size_t i = 0; i < n; ++i) {
        double& v = moved[3 * i];
        v = kind == 0 ? std::exp(4.0 * v) : 1.0 - std::pow(v, 3.0);
      }
      const DeltaResult m = borgonovo_delta({moved.data(), n, 3}, y);
      rep.check(m.delta == r.delta, "%s transform of Z1 leaves every index bitwise unchanged",
                kind == 0 ? "increasing" : "decreasing");
    }
  }
  rep.check(seconds_since(t0) < 60.0, "runtime %.1f s (limit 60 s)", seconds_since(t0));
}

// 5. Screening ------------------------------------------------------------------

void ac5(const Paths& p, Report& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  const McDataset ds = load_dataset(p.work / "mc6" / "dataset.bin");
  rep.check(ds.rows == 1000, "database holds %zu runs (%zu successful), prior '%s'", ds.rows, ds.ok_count(),
            ds.prior.name.c_str());
  FieldSensitivityOptions o;
  o.delta.partitions = 10;
  o.delta.bins = 20;
  const SensitivityMap map = field_sensitivity(ds, SensitivityTarget::Field, o);
  const auto ranking = screen(map, 0.05);
  std::ostringstream line;
  for (const auto& e : ranking) line << e.input << '=' << e.median << ' ';
  rep.note("domain medians: " + line.str());
  rep.check(!ranking.empty() && ranking.front().input == "alpha_mpm", "alpha_mpm ranked first (first is %s)",
            ranking.empty() ? "none" : ranking.front().input.c_str());
  for (const char* name : {"porosity", "theta_cr"}) {
    const auto it = std::find_if(ranking.begin(), ranking.end(), [&](const auto& e) { return e.input == name; });
    rep.check(it != ranking.end() && it->median < 0.05, "%s median %.4f below 0.05", name,
              it != ranking.end() ? it->median : std::nan(""));
  }
  rep.note("sensitivity evaluation " + std::to_string(seconds_since(t0)) + " s");
}

// 6. Emulator -------------------------------------------------------------------

struct DeskEmulator {
  MlpModel model;
  McDataset ds;
  PipelineManifest manifest;
};

DeskEmulator load_desk_emulator(const Paths& p) {
  DeskEmulator e;
  e.model = load_model(p.work / "emulator" / "model.mlp");
  e.manifest = read_manifest(p.work / "emulator" / "manifest.json");
  e.ds = load_dataset(p.work / "mc4" / "dataset.bin");
  return e;
}

void ac6(const Paths& p, Report& rep) {
  const DeskEmulator e = load_desk_emulator(p);
  const auto& opt = e.manifest.options;
  rep.note("training wall time " + std::to_string(e.manifest.wall_seconds) + " s");
  rep.check(e.manifest.wall_seconds < 1800.0, "training runtime %.0f s (limit 1800 s)", e.manifest.wall_seconds);
  double x_lo = -1e300;
  double x_hi = 1e300;
  const std::string xr = opt.value("x_range", std::string());
  if (!xr.empty()) std::sscanf(xr.c_str(), "%lf,%lf", &x_lo, &x_hi);
  const auto columns = field_columns(e.ds, x_lo, x_hi);
  bool aligned = columns.size() == e.model.output_size();
  for (std::size_t c = 0; aligned && c < columns.size(); ++c) {
    aligned = e.ds.field_x[columns[c]] == e.model.output_x[c] && e.ds.field_y[columns[c]] == e.model.output_y[c];
  }
  rep.check(aligned, "model outputs match %zu dataset cells with x in [%g, %g]", columns.size(), x_lo, x_hi);
  rep.check(e.model.input_size() == 4, "model has %zu inputs", e.model.input_size());
  if (!aligned) return;

  const Split sp = split_dataset(e.ds, opt.at("val_frac").get<double>(), opt.at("test_frac").get<double>(),
                                 e.manifest.seed);
  const Q2Result q2 = q2_field(e.model, training_set(e.ds, sp.test, columns));
  const std::size_t defined = static_cast<std::size_t>(std::count(q2.undefined.begin(), q2.undefined.end(), 0));
  rep.check(q2.median() > 0.9, "test Q2 median %.4f over %zu cells with nonzero variance (%zu test rows, tol > 0.9)",
            q2.median(), defined, sp.test.size());

  // Central differences; a rectifier kink inside the stencil makes the two
  // one-sided quotients disagree and the point is redrawn.
  Rng rng = make_rng(601);
  const PriorSpec prior = e.ds.prior;
  const LogPosterior lp(e.model, prior, ObservationSet{});
  std::size_t checked = 0;
  std::size_t redrawn = 0;
  double worst = 0.0;
  while (checked < 100 && redrawn < 1000) {
    std::vector<double> zeta(prior.dim());
    for (std::size_t k = 0; k < zeta.size(); ++k) {
      zeta[k] = prior.bounds[k].lo + (0.02 + 0.96 * uniform01(rng)) * prior.bounds[k].width();
    }
    const auto in = lp.model_input(zeta);
    const auto jac = input_gradient(e.model, in);
    const auto f0 = predict(e.model, in);
    const std::size_t n_out = e.model.output_size();
    double scale = 0.0;
    for (double v : jac) scale = std::max(scale, std::abs(v));
    double err = 0.0;
    bool kink = false;
    for (std::size_t i = 0; i < in.size() && !kink; ++i) {
      const double h = 1e-6 * e.model.input_scaling.span(i);
      auto a = in;
      auto b = in;
      a[i] += h;
      b[i] -= h;
      const auto fa = predict(e.model, a);
      const auto fb = predict(e.model, b);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double fwd = (fa[o] - f0[o]) / h;
        const double bwd = (f0[o] - fb[o]) / h;
        if (std::abs(fwd - bwd) > 1e-3 * scale) {
          kink = true;
          break;
        }
        err = std::max(err, std::abs(0.5 * (fwd + bwd) - jac[o * in.size() + i]));
      }
    }
    if (kink) {
      ++redrawn;
      continue;
    }
    ++checked;
    worst = std::max(worst, err / scale);
  }
  rep.check(checked == 100 && worst < 1e-5,
            "input gradients vs central differences at %zu points: max relative error %.2e (tol 1e-5), %zu "
            "points redrawn at rectifier kinks",
            checked, worst, redrawn);
}

// 7. Sampler oracles --------------------------------------------------------------

LogDensity gaussian_density(const Eigen::Matrix2d& cov) {
  const Eigen::Matrix2d prec = cov.inverse();
  return [prec](std::span<const double> q, std::span<double> grad) {
    const Eigen::Vector2d x(q[0], q[1]);
    const Eigen::Vector2d g = -prec * x;
    grad[0] = g[0];
    grad[1] = g[1];
    return 0.5 * x.dot(g);
  };
}

void ac7(const Paths&, Report& rep) {
  const auto t0 = std::chrono::steady_clock::now();
  for (double rho : {0.0, 0.9}) {
    Eigen::Matrix2d cov;
    cov << 1.0, rho, rho, 1.0;
    for (Kernel kernel : {Kernel::Hmc, Kernel::Nuts}) {
      McmcOptions o;
      o.chains = 4;
      o.draws = 10000;
      o.warmup = 1000;
      o.kernel = kernel;
      o.seed = 700 + static_cast<std::uint64_t>(10 * rho) + (kernel == Kernel::Nuts ? 1 : 0);
      std::vector<Eigen::VectorXd> inits;
      Rng rng = make_rng(o.seed, 99);
      for (std::size_t c = 0; c < o.chains; ++c) {
        Eigen::VectorXd q(2);
        q << 2.0 * uniform01(rng) - 1.0, 2.0 * uniform01(rng) - 1.0;
        inits.push_back(q);
      }
      const ChainSet s = run_chains(gaussian_density(cov), inits, o);
      const char* name = kernel == Kernel::Nuts ? "NUTS" : "HMC";
      const double n = static_cast<double>(s.chains * s.draws);
      Eigen::Vector2d mean = Eigen::Vector2d::Zero();
      for (std::size_t c = 0; c < s.chains; ++c) {
        for (std::size_t d = 0; d < s.draws; ++d) mean += Eigen::Vector2d(s.at(c, d, 0), s.at(c, d, 1)) / n;
      }
      Eigen::Matrix2d est = Eigen::Matrix2d::Zero();
      for (std::size_t c = 0; c < s.chains; ++c) {
        for (std::size_t d = 0; d < s.draws; ++d) {
          const Eigen::Vector2d x = Eigen::Vector2d(s.at(c, d, 0), s.at(c, d, 1)) - mean;
          est += x * x.transpose() / (n - 1.0);
        }
      }
      for (std::size_t k = 0; k < 2; ++k) {
        ChainDraws draws;
        for (std::size_t c = 0; c < s.chains; ++c) draws.push_back(s.series(c, k));
        const double se = mcse_mean(draws);
        rep.check(std::abs(mean[static_cast<Eigen::Index>(k)]) < 3.0 * se,
                  "%s rho=%.1f: mean[%zu] %.4f within 3 MCSE (%.4f)", name, rho, k,
                  mean[static_cast<Eigen::Index>(k)], 3.0 * se);
      }
      const double cov_err = (est - cov).cwiseAbs().maxCoeff();
      rep.check(cov_err < 0.05, "%s rho=%.1f: covariance max deviation %.4f (tol 5%% of unit variance)", name, rho,
                cov_err);
    }
  }

  ChainDraws iid(4);
  ChainDraws ar(4);
  const double phi = 0.9;
  for (std::size_t c = 0; c < 4; ++c) {
    Rng rng = make_rng(710, c);
    for (int d = 0; d < 5000; ++d) iid[c].push_back(standard_normal(rng));
    double x = standard_normal(rng);
    for (int d = 0; d < 20000; ++d) {
      ar[c].push_back(x);
      x = phi * x + std::sqrt(1.0 - phi * phi) * standard_normal(rng);
    }
  }
  const double rhat = split_rhat(iid).rhat;
  rep.check(rhat >= 0.999 && rhat <= 1.01, "split R-hat on iid chains %.5f in [0.999, 1.01]", rhat);
  const double ess = effective_sample_size(ar).ess;
  const double expect = 80000.0 * (1.0 - phi) / (1.0 + phi);
  rep.check(rel_err(ess, expect) < 0.2, "AR(1) ESS %.0f vs closed form %.0f (error %.1f%%, tol 20%%)", ess, expect,
            100.0 * rel_err(ess, expect));
  rep.check(seconds_since(t0) < 300.0, "runtime %.1f s (limit 300 s)", seconds_since(t0));
}

// 8-9. Twin experiments ------------------------------------------------------------

McmcOptions twin_options(std::uint64_t seed) {
  McmcOptions o;
  o.chains = 4;
  o.draws = 10000;
  o.warmup = 1000;
  o.seed = seed;
  return o;
}

std::vector<std::size_t> observed_cells(const MlpModel& m) { return cells_in_range(m.output_x, 12.78, 20.0); }

/// Checks that every 95% interval contains the truth; returns the widths.
std::vector<double> check_intervals(const PosteriorSample& s, const std::vector<double>& truth, const char* label,
                                    Report& rep) {
  const auto summary = summarize(s);
  std::vector<double> widths;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    const ParamSummary& p = summary[k];
    rep.check(p.q025 <= truth[k] && truth[k] <= p.q975, "%s %s: 95%% CI [%.4g, %.4g] contains %.4g (R-hat %.4f)",
              label, p.name.c_str(), p.q025, p.q975, truth[k], p.rhat);
    widths.push_back(p.q975 - p.q025);
  }
  return widths;
}

void ac8(const Paths& p, Report& rep) {
  const DeskEmulator e = load_desk_emulator(p);
  const PriorSpec prior = e.ds.prior;
  const auto truth = parameter_vector(prior, reference_truth());
  const LogPosterior base(e.model, prior, ObservationSet{});
  const auto field = predict(e.model, base.model_input(truth));
  const auto cells = observed_cells(e.model);
  rep.note(std::to_string(cells.size()) + " observed cells with x in [12.78, 20.0]");

  std::vector<std::vector<double>> widths;
  const std::vector<double> noises = {1e-4, 5e-4, 1e-3, 5e-3};
  for (std::size_t i = 0; i < noises.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    ObservationSet obs = twin_observations(field, cells, e.model.output_x, e.model.output_y, noises[i], 800 + i);
    obs.truth = truth;
    const LogPosterior lp(e.model, prior, obs);
    const PosteriorSample s = run_mcmc(lp, twin_options(810 + i));
    char label[32];
    std::snprintf(label, sizeof label, "noise %.0e", noises[i]);
    widths.push_back(check_intervals(s, truth, label, rep));
    const auto sigma = summarize(s).back();
    rep.check(sigma.q025 <= noises[i] && noises[i] <= sigma.q975, "%s sigma_o: 95%% CI [%.3e, %.3e] contains %.0e",
              label, sigma.q025, sigma.q975, noises[i]);
    rep.check(seconds_since(t0) < 1200.0, "%s runtime %.0f s (limit 1200 s)", label, seconds_since(t0));
  }
  for (std::size_t k = 0; k < prior.dim(); ++k) {
    bool increasing = true;
    std::ostringstream w;
    for (std::size_t i = 0; i < widths.size(); ++i) {
      w << widths[i][k] << (i + 1 < widths.size() ? " < " : "");
      if (i > 0) increasing = increasing && widths[i][k] > widths[i - 1][k];
    }
    rep.check(increasing, "%s CI width increases with noise: %s", std::string(param_name(prior.layout[k])).c_str(),
              w.str().c_str());
  }
}

void ac9(const Paths& p, Report& rep) {
  const DeskEmulator e = load_desk_emulator(p);
  const PriorSpec prior = e.ds.prior;
  const auto truth = parameter_vector(prior, reference_truth());
  const RunConfig c = load_config(p.config);
  const Grid g = grid_for(c);
  const auto t0 = std::chrono::steady_clock::now();
  const SimulationResult r = run_simulation(g, c, params_from_values(prior.layout, truth, c.params));
  rep.check(r.ok, "solver run at the generating parameters (%.1f s)", seconds_since(t0));
  if (!r.ok) return;
  const auto field = solver_field(r, g, e.model);
  const auto t1 = std::chrono::steady_clock::now();
  const auto cells = observed_cells(e.model);
  ObservationSet obs = twin_observations(field, cells, e.model.output_x, e.model.output_y, 1e-3, 900);
  obs.truth = truth;
  const LogPosterior lp(e.model, prior, obs);
  {
    const auto emu = predict(e.model, lp.model_input(truth));
    double sum = 0.0;
    double mean = 0.0;
    double worst = 0.0;
    for (std::size_t i : cells) {
      const double d = emu[i] - field[i];
      sum += d * d;
      mean += d;
      worst = std::max(worst, std::abs(d));
    }
    const double n = static_cast<double>(cells.size());
    char buf[160];
    std::snprintf(buf, sizeof buf, "emulator minus solver at the truth over %zu cells: rms %.3e m, mean %.3e m, max %.3e m",
                  cells.size(), std::sqrt(sum / n), mean / n, worst);
    rep.note(buf);
  }
  const PosteriorSample s = run_mcmc(lp, twin_options(901));
  check_intervals(s, truth, "solver truth", rep);
  const auto sigma = summarize(s).back();
  rep.note("sigma_o posterior 95% CI [" + std::to_string(sigma.q025) + ", " + std::to_string(sigma.q975) + "]");
  rep.check(seconds_since(t1) < 1800.0, "inference runtime %.0f s (limit 1800 s)", seconds_since(t1));
}

// 10. Reproducibility and observation-count sweep -----------------------------------

int run_cli(const Paths& p, const std::string& args) {
  const std::string cmd = "\"" + p.cli.string() + "\" " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string file_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void ac10(const Paths& p, Report& rep) {
  const fs::path root = p.work / "ac10";
  fs::remove_all(root);
  for (const char* run : {"a", "b"}) {
    const fs::path d = root / run;
    const std::string jobs = std::string(run) == "a" ? "1" : "2";
    const std::string common = "--config \"" + p.tiny.string() + "\" --seed 1010 --jobs " + jobs + " --out ";
    const int rc_mc = run_cli(p, common + "\"" + (d / "mc").string() + "\" mc --n 60 --prior reduced");
    const int rc_tr = run_cli(p, common + "\"" + (d / "train").string() + "\" train --dataset \"" +
                                     (d / "mc" / "dataset.bin").string() + "\" --hidden 16,16 --epochs 50");
    const int rc_in = run_cli(p, common + "\"" + (d / "infer").string() + "\" infer --model \"" +
                                     (d / "train" / "model.mlp").string() +
                                     "\" --twin noise=0.001 --chains 2 --draws 200 --warmup 100 "
                                     "--obs-x-range -1e9,1e9");
    rep.check(rc_mc == 0 && rc_tr == 0 && rc_in == 0, "pipeline run %s (jobs %s): exit codes %d %d %d", run,
              jobs.c_str(), rc_mc, rc_tr, rc_in);
  }
  for (const char* f : {"mc/dataset.bin", "train/model.mlp", "infer/posterior.bin"}) {
    const std::string a = file_bytes(root / "a" / f);
    const std::string b = file_bytes(root / "b" / f);
    rep.check(!a.empty() && a == b, "%s bitwise identical across reruns (%zu bytes)", f, a.size());
  }

  const auto t0 = std::chrono::steady_clock::now();
  const DeskEmulator e = load_desk_emulator(p);
  const PriorSpec prior = e.ds.prior;
  const auto truth = parameter_vector(prior, reference_truth());
  const LogPosterior base(e.model, prior, ObservationSet{});
  const auto cells = observed_cells(e.model);
  ObservationSet pool = twin_observations(predict(e.model, base.model_input(truth)), cells, e.model.output_x,
                                          e.model.output_y, 1e-3, 1000);
  pool.truth = truth;
  std::vector<std::size_t> counts;
  // Five counts evenly spaced from a fifth of the pool up to the full pool.
  const double first = static_cast<double>(pool.size()) / 5.0;
  for (int i = 0; i < 5; ++i) {
    counts.push_back(static_cast<std::size_t>(std::lround(first + i * (static_cast<double>(pool.size()) - first) / 4.0)));
  }
  McmcOptions o;
  o.chains = 2;
  o.draws = 1500;
  o.warmup = 500;
  o.seed = 1001;
  const std::size_t reps = 3;
  const CountStudy study = obs_count_convergence(e.model, prior, pool, counts, reps, o);
  write_count_study_csv(root, study);
  rep.note("count table written to " + (root / "obs_count_convergence.csv").string());
  for (Param param : {Param::AlphaMpm, Param::AlphaKs}) {
    const auto k = static_cast<std::size_t>(prior.column(param));
    std::vector<double> mean_width(counts.size(), 0.0);
    for (const CountRow& row : study.rows) {
      const std::size_t i = static_cast<std::size_t>(
          std::find(counts.begin(), counts.end(), row.count) - counts.begin());
      mean_width[i] += (row.summary[k].q975 - row.summary[k].q025) / static_cast<double>(reps);
    }
    bool non_increasing = true;
    std::ostringstream w;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      w << counts[i] << ':' << mean_width[i] << ' ';
      if (i > 0) non_increasing = non_increasing && mean_width[i] <= mean_width[i - 1];
    }
    rep.check(non_increasing, "%s mean CI width non-increasing in observation count: %s",
              std::string(param_name(param)).c_str(), w.str().c_str());
  }
  rep.note("count sweep " + std::to_string(seconds_since(t0)) + " s");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string which;
  Paths p;
  app.add_option("criterion", which, "Criterion number 1-10 or 'all'")->required();
  app.add_option("--work", p.work, "Directory holding the prepared databases and emulator")->required();
  app.add_option("--cli", p.cli, "morphouq executable");
  app.add_option("--config", p.config, "Desk-scale run configuration")->required();
  app.add_option("--tiny", p.tiny, "Small run configuration for the rerun check");
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<void(const Paths&, Report&)>> criteria = {ac1, ac2, ac3, ac4, ac5,
                                                                           ac6, ac7, ac8, ac9, ac10};
  std::vector<std::size_t> selected;
  if (which == "all") {
    for (std::size_t i = 0; i < criteria.size(); ++i) selected.push_back(i);
  } else {
    const int n = std::atoi(which.c_str());
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion '%s'\n", which.c_str());
      return 2;
    }
    selected.push_back(static_cast<std::size_t>(n - 1));
  }

  bool all = true;
  for (std::size_t i : selected) {
    Report rep;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i](p, rep);
    } catch (const std::exception& ex) {
      rep.check(false, "error: %s", ex.what());
    }
    std::printf("AC%zu %s (%.1f s)\n", i + 1, rep.pass() ? "PASS" : "FAIL", seconds_since(t0));
    for (const auto& l : rep.lines()) std::printf("  %s\n", l.c_str());
    std::fflush(stdout);
    all = all && rep.pass();
  }
  return all ? 0 : 1;
}
