#include "morphouq/bayes/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "morphouq/errors.hpp"
#include "morphouq/parallel.hpp"

namespace morphouq {

namespace {

constexpr double kMaxDeltaH = 1000.0;

double log_sum_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double evaluate(const LogDensity& target, const Eigen::VectorXd& q, Eigen::VectorXd& grad) {
  grad.resize(q.size());
  return target(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())),
                std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
}

bool finite_point(const PhasePoint& z) {
  return std::isfinite(z.logp) && z.grad.allFinite() && z.q.allFinite();
}

}  // namespace

Metric Metric::unit(std::size_t dim) {
  return diagonal(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dim)));
}

Metric Metric::diagonal(const Eigen::VectorXd& inv_mass) {
  if (inv_mass.size() == 0 || !(inv_mass.array() > 0.0).all()) {
    throw InferenceError("diagonal metric entries must be positive");
  }
  Metric m;
  m.diag_ = inv_mass;
  return m;
}

Metric Metric::dense(const Eigen::MatrixXd& inv_mass) {
  if (inv_mass.rows() == 0 || inv_mass.rows() != inv_mass.cols()) {
    throw InferenceError("dense metric must be a non-empty square matrix");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(inv_mass);
  if (llt.info() != Eigen::Success) throw InferenceError("dense metric is not positive definite");
  Metric m;
  m.dense_ = true;
  m.inv_ = inv_mass;
  m.chol_ = llt.matrixL();
  return m;
}

Eigen::VectorXd Metric::velocity(const Eigen::VectorXd& p) const {
  if (dense_) return inv_ * p;
  return diag_.cwiseProduct(p);
}

Eigen::VectorXd Metric::sample_momentum(Rng& rng) const {
  const auto n = static_cast<Eigen::Index>(dim());
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = standard_normal(rng);
  if (dense_) return chol_.transpose().triangularView<Eigen::Upper>().solve(z);
  return z.cwiseQuotient(diag_.cwiseSqrt());
}

Eigen::MatrixXd Metric::inverse_mass() const {
  if (dense_) return inv_;
  return diag_.asDiagonal();
}

PhasePoint make_point(const LogDensity& target, const Eigen::VectorXd& q) {
  PhasePoint z;
  z.q = q;
  z.p = Eigen::VectorXd::Zero(q.size());
  z.logp = evaluate(target, z.q, z.grad);
  return z;
}

bool leapfrog(PhasePoint& z, double eps, std::size_t steps, const Metric& metric,
              const LogDensity& target) {
  for (std::size_t s = 0; s < steps; ++s) {
    z.p += 0.5 * eps * z.grad;
    z.q += eps * metric.velocity(z.p);
    z.logp = evaluate(target, z.q, z.grad);
    if (!finite_point(z)) return false;
    z.p += 0.5 * eps * z.grad;
  }
  return true;
}

double hamiltonian(const PhasePoint& z, const Metric& metric) {
  return -z.logp + metric.kinetic(z.p);
}

StepInfo hmc_step(PhasePoint& z, double eps, std::size_t steps, const Metric& metric, Rng& rng,
                  const LogDensity& target) {
  StepInfo info;
  z.p = metric.sample_momentum(rng);
  const double h0 = hamiltonian(z, metric);
  PhasePoint prop = z;
  const bool ok = leapfrog(prop, eps, steps, metric, target);
  info.leapfrogs = steps;
  double h1 = ok ? hamiltonian(prop, metric) : std::numeric_limits<double>::infinity();
  if (!std::isfinite(h1)) h1 = std::numeric_limits<double>::infinity();
  info.divergent = !ok || h1 - h0 > kMaxDeltaH;
  info.accept_stat = std::isfinite(h1) ? std::min(1.0, std::exp(h0 - h1)) : 0.0;
  if (!info.divergent && uniform01(rng) < info.accept_stat) {
    prop.p = -prop.p;
    z = std::move(prop);
    info.accepted = true;
  }
  info.energy = hamiltonian(z, metric);
  return info;
}

namespace {

struct TreeBuilder {
  const Metric& metric;
  const LogDensity& target;
  Rng& rng;
  double eps;
  double h0;
  std::size_t leapfrogs = 0;
  double sum_metro = 0.0;
  bool divergent = false;

  static bool criterion(const Eigen::VectorXd& sharp_minus, const Eigen::VectorXd& sharp_plus,
                        const Eigen::VectorXd& rho) {
    return sharp_plus.dot(rho) > 0.0 && sharp_minus.dot(rho) > 0.0;
  }

  // Extends the trajectory from `z` by 2^depth leapfrog steps in direction
  // `sign`, sampling `propose` multinomially within the new subtree.
  bool build(PhasePoint& z, std::size_t depth, PhasePoint& propose, Eigen::VectorXd& sharp_beg,
             Eigen::VectorXd& sharp_end, Eigen::VectorXd& rho, Eigen::VectorXd& p_beg,
             Eigen::VectorXd& p_end, double sign, double& log_sum_weight) {
    if (depth == 0) {
      const bool ok = leapfrog(z, sign * eps, 1, metric, target);
      ++leapfrogs;
      double h = ok ? hamiltonian(z, metric) : std::numeric_limits<double>::infinity();
      if (!std::isfinite(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0 > kMaxDeltaH) divergent = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro += h0 - h > 0.0 ? 1.0 : std::exp(h0 - h);
      propose = z;
      sharp_beg = metric.velocity(z.p);
      sharp_end = sharp_beg;
      rho += z.p;
      p_beg = z.p;
      p_end = p_beg;
      return !divergent;
    }
    const auto n = z.q.size();
    double lsw_init = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd p_init_end(n);
    Eigen::VectorXd sharp_init_end(n);
    Eigen::VectorXd rho_init = Eigen::VectorXd::Zero(n);
    if (!build(z, depth - 1, propose, sharp_beg, sharp_init_end, rho_init, p_beg, p_init_end, sign,
               lsw_init)) {
      return false;
    }
    PhasePoint propose_final = z;
    double lsw_final = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd p_final_beg(n);
    Eigen::VectorXd sharp_final_beg(n);
    Eigen::VectorXd rho_final = Eigen::VectorXd::Zero(n);
    if (!build(z, depth - 1, propose_final, sharp_final_beg, sharp_end, rho_final, p_final_beg,
               p_end, sign, lsw_final)) {
      return false;
    }
    const double lsw_subtree = log_sum_exp(lsw_init, lsw_final);
    log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
    if (lsw_final > lsw_subtree) {
      propose = propose_final;
    } else if (uniform01(rng) < std::exp(lsw_final - lsw_subtree)) {
      propose = propose_final;
    }
    const Eigen::VectorXd rho_subtree = rho_init + rho_final;
    rho += rho_subtree;
    bool persist = criterion(sharp_beg, sharp_end, rho_subtree);
    persist = persist && criterion(sharp_beg, sharp_final_beg, rho_init + p_final_beg);
    persist = persist && criterion(sharp_init_end, sharp_end, rho_final + p_init_end);
    return persist;
  }
};

}  // namespace

StepInfo nuts_step(PhasePoint& z, double eps, const Metric& metric, std::size_t max_depth, Rng& rng,
                   const LogDensity& target) {
  StepInfo info;
  const auto n = z.q.size();
  z.p = metric.sample_momentum(rng);
  PhasePoint z_fwd = z;
  PhasePoint z_bck = z;
  PhasePoint sample = z;
  Eigen::VectorXd p_sharp = metric.velocity(z.p);
  Eigen::VectorXd p_fwd_fwd = z.p, p_fwd_bck = z.p, p_bck_fwd = z.p, p_bck_bck = z.p;
  Eigen::VectorXd s_fwd_fwd = p_sharp, s_fwd_bck = p_sharp, s_bck_fwd = p_sharp, s_bck_bck = p_sharp;
  Eigen::VectorXd rho = z.p;
  double log_sum_weight = 0.0;
  TreeBuilder tb{metric, target, rng, eps, hamiltonian(z, metric)};

  std::size_t depth = 0;
  bool stopped = false;
  while (depth <= max_depth) {
    Eigen::VectorXd rho_fwd = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd rho_bck = Eigen::VectorXd::Zero(n);
    double lsw_subtree = -std::numeric_limits<double>::infinity();
    PhasePoint propose;
    bool valid;
    if (uniform01(rng) > 0.5) {
      PhasePoint cur = z_fwd;
      rho_bck = rho;
      p_bck_fwd = p_fwd_bck;
      s_bck_fwd = s_fwd_bck;
      valid = tb.build(cur, depth, propose, s_fwd_bck, s_fwd_fwd, rho_fwd, p_fwd_bck, p_fwd_fwd, 1.0,
                       lsw_subtree);
      z_fwd = std::move(cur);
    } else {
      PhasePoint cur = z_bck;
      rho_fwd = rho;
      p_fwd_bck = p_bck_fwd;
      s_fwd_bck = s_bck_fwd;
      valid = tb.build(cur, depth, propose, s_bck_fwd, s_bck_bck, rho_bck, p_bck_fwd, p_bck_bck, -1.0,
                       lsw_subtree);
      z_bck = std::move(cur);
    }
    if (!valid) {
      stopped = true;
      break;
    }
    info.depth = ++depth;
    if (lsw_subtree > log_sum_weight) {
      sample = propose;
    } else if (uniform01(rng) < std::exp(lsw_subtree - log_sum_weight)) {
      sample = propose;
    }
    log_sum_weight = log_sum_exp(log_sum_weight, lsw_subtree);
    rho = rho_bck + rho_fwd;
    bool persist = TreeBuilder::criterion(s_bck_bck, s_fwd_fwd, rho);
    persist = persist && TreeBuilder::criterion(s_bck_bck, s_fwd_bck, rho_bck + p_fwd_bck);
    persist = persist && TreeBuilder::criterion(s_bck_fwd, s_fwd_fwd, rho_fwd + p_bck_fwd);
    if (!persist) {
      stopped = true;
      break;
    }
  }
  info.max_depth_hit = !stopped;
  info.divergent = tb.divergent;
  info.leapfrogs = tb.leapfrogs;
  info.accept_stat = tb.leapfrogs > 0 ? tb.sum_metro / static_cast<double>(tb.leapfrogs) : 0.0;
  info.accepted = sample.q != z.q;
  z = std::move(sample);
  info.energy = hamiltonian(z, metric);
  return info;
}

DualAveraging::DualAveraging(double eps0, double target_accept) : target_(target_accept) {
  restart(eps0);
}

void DualAveraging::restart(double eps0) {
  mu_ = std::log(10.0 * eps0);
  s_bar_ = 0.0;
  x_bar_ = 0.0;
  eps_ = eps0;
  count_ = 0;
}

double DualAveraging::update(double accept_stat) {
  constexpr double kGamma = 0.05;
  constexpr double kT0 = 10.0;
  constexpr double kKappa = 0.75;
  const double a = std::isfinite(accept_stat) ? std::min(1.0, accept_stat) : 0.0;
  ++count_;
  const double t = static_cast<double>(count_);
  const double eta = 1.0 / (t + kT0);
  s_bar_ = (1.0 - eta) * s_bar_ + eta * (target_ - a);
  const double x = mu_ - s_bar_ * std::sqrt(t) / kGamma;
  const double w = std::pow(t, -kKappa);
  x_bar_ = (1.0 - w) * x_bar_ + w * x;
  eps_ = std::exp(x);
  return eps_;
}

double DualAveraging::final_step() const { return count_ == 0 ? eps_ : std::exp(x_bar_); }

double initial_step_size(const PhasePoint& z0, double eps, const Metric& metric, Rng& rng,
                         const LogDensity& target) {
  auto accept = [&](double e) {
    PhasePoint z = z0;
    z.p = metric.sample_momentum(rng);
    const double h0 = hamiltonian(z, metric);
    if (!leapfrog(z, e, 1, metric, target)) return 0.0;
    const double h = hamiltonian(z, metric);
    return std::isfinite(h) ? std::exp(h0 - h) : 0.0;
  };
  double a = accept(eps);
  const double dir = a > 0.8 ? 1.0 : -1.0;
  for (int i = 0; i < 100; ++i) {
    const double next = dir > 0 ? eps * 2.0 : eps * 0.5;
    if (!(next > 1e-14 && next < 1e7)) break;
    const double an = accept(next);
    if (dir > 0 && !(an > 0.8)) break;
    eps = next;
    if (dir < 0 && an > 0.8) break;
  }
  return eps;
}

std::size_t McmcOptions::resolved_warmup() const {
  if (warmup > 0) return warmup;
  return std::max<std::size_t>(100, draws / 5);
}

std::vector<double> ChainSet::series(std::size_t c, std::size_t k) const {
  std::vector<double> v(draws);
  for (std::size_t d = 0; d < draws; ++d) v[d] = at(c, d, k);
  return v;
}

namespace {

// Welford accumulator for the windowed metric estimate.
struct CovEstimator {
  std::size_t n = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd m2;

  void reset(Eigen::Index dim) {
    n = 0;
    mean = Eigen::VectorXd::Zero(dim);
    m2 = Eigen::MatrixXd::Zero(dim, dim);
  }
  void add(const Eigen::VectorXd& q) {
    ++n;
    const Eigen::VectorXd d = q - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (q - mean).transpose();
  }
  Metric metric(bool dense) const {
    const double nd = static_cast<double>(n);
    Eigen::MatrixXd cov = m2 / std::max(1.0, nd - 1.0);
    const double w = nd / (nd + 5.0);
    const double reg = 1e-3 * 5.0 / (nd + 5.0);
    if (dense) {
      cov = w * cov + reg * Eigen::MatrixXd::Identity(cov.rows(), cov.cols());
      return Metric::dense(cov);
    }
    Eigen::VectorXd var = cov.diagonal();
    var = (w * var).array() + reg;
    return Metric::diagonal(var);
  }
};

struct Windows {
  std::size_t warmup;
  std::size_t init_buffer = 75;
  std::size_t term_buffer = 50;
  std::size_t window = 25;
  std::size_t next_end = 0;

  explicit Windows(std::size_t w) : warmup(w) {
    if (init_buffer + term_buffer + window > warmup) {
      init_buffer = static_cast<std::size_t>(0.15 * static_cast<double>(warmup));
      term_buffer = static_cast<std::size_t>(0.1 * static_cast<double>(warmup));
      window = warmup - (init_buffer + term_buffer);
    }
    next_end = init_buffer + window - 1;
  }
  bool collecting(std::size_t i) const { return i >= init_buffer && i + term_buffer < warmup; }
  bool window_ends(std::size_t i) const { return i == next_end && i + 1 != warmup; }
  void advance(std::size_t i) {
    const std::size_t last = warmup - term_buffer - 1;
    if (next_end == last) return;
    window *= 2;
    next_end = i + window;
    if (next_end != last && next_end + 2 * window >= warmup - term_buffer) next_end = last;
  }
};

}  // namespace

ChainSet run_chains(const LogDensity& target, const std::vector<Eigen::VectorXd>& inits,
                    const McmcOptions& o) {
  if (inits.size() != o.chains) throw InferenceError("one initial point per chain is required");
  if (o.chains == 0 || o.draws == 0) throw InferenceError("chain and draw counts must be positive");
  if (!(o.target_accept > 0.0 && o.target_accept <= 1.0)) {
    throw InferenceError("target acceptance must lie in (0, 1]");
  }
  const std::size_t warmup = o.resolved_warmup();
  if (warmup < 100) throw InferenceError("warm-up needs at least 100 iterations");
  const auto dim = inits.front().size();
  ChainSet out;
  out.chains = o.chains;
  out.draws = o.draws;
  out.dim = static_cast<std::size_t>(dim);
  out.values.assign(o.chains * o.draws * out.dim, 0.0);
  out.stats.resize(o.chains);

  parallel_for(o.chains, o.jobs, [&](std::size_t c) {
    Rng rng = make_rng(o.seed, c + 1);
    PhasePoint z = make_point(target, inits[c]);
    if (!finite_point(z)) {
      throw InferenceError("chain " + std::to_string(c) + " starts at a point of zero density");
    }
    Metric metric = o.dense_metric ? Metric::dense(Eigen::MatrixXd::Identity(dim, dim))
                                   : Metric::unit(out.dim);
    auto transition = [&](double eps) {
      return o.kernel == Kernel::Nuts ? nuts_step(z, eps, metric, o.max_depth, rng, target)
                                      : hmc_step(z, eps, o.hmc_steps, metric, rng, target);
    };
    double eps = initial_step_size(z, 1.0, metric, rng, target);
    DualAveraging da(eps, o.target_accept);
    Windows win(warmup);
    CovEstimator est;
    est.reset(dim);
    ChainStats& st = out.stats[c];
    for (std::size_t i = 0; i < warmup; ++i) {
      const StepInfo info = transition(eps);
      eps = da.update(info.accept_stat);
      st.warmup_steps.push_back(eps);
      if (o.adapt_metric && win.collecting(i)) est.add(z.q);
      if (o.adapt_metric && win.window_ends(i)) {
        metric = est.metric(o.dense_metric);
        est.reset(dim);
        eps = initial_step_size(z, eps, metric, rng, target);
        da.restart(eps);
        win.advance(i);
      }
    }
    eps = da.final_step();
    st.step_size = eps;
    st.inverse_mass = metric.inverse_mass();
    double accept_sum = 0.0;
    for (std::size_t d = 0; d < o.draws; ++d) {
      const StepInfo info = transition(eps);
      accept_sum += info.accept_stat;
      st.divergences += info.divergent ? 1 : 0;
      st.max_depth_hits += info.max_depth_hit ? 1 : 0;
      st.leapfrogs += info.leapfrogs;
      std::copy(z.q.data(), z.q.data() + dim, out.values.begin() + static_cast<std::ptrdiff_t>((c * o.draws + d) * out.dim));
    }
    st.mean_accept = accept_sum / static_cast<double>(o.draws);
    if (st.divergences == o.draws) {
      throw InferenceError("chain " + std::to_string(c) + ": every transition diverged");
    }
  });
  return out;
}

}  // namespace morphouq
