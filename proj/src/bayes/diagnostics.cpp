#include "morphouq/bayes/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "morphouq/errors.hpp"

namespace morphouq {

namespace {

void check_chains(const ChainDraws& chains, std::size_t min_chains, std::size_t min_draws) {
  if (chains.size() < min_chains) {
    throw SizingError("diagnostic needs at least " + std::to_string(min_chains) + " chains");
  }
  const std::size_t n = chains.front().size();
  if (n < min_draws) throw SizingError("diagnostic needs at least " + std::to_string(min_draws) + " draws per chain");
  for (const auto& c : chains) {
    if (c.size() != n) throw SizingError("chains differ in length");
  }
}

double mean_of(const double* v, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += v[i];
  return s / static_cast<double>(n);
}

double sample_var(const double* v, std::size_t n, double mean) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += (v[i] - mean) * (v[i] - mean);
  return s / static_cast<double>(n - 1);
}

}  // namespace

RhatResult split_rhat(const ChainDraws& chains) {
  check_chains(chains, 2, 4);
  const std::size_t half = chains.front().size() / 2;
  const std::size_t total = chains.front().size();
  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& c : chains) {
    for (const double* start : {c.data(), c.data() + (total - half)}) {
      const double m = mean_of(start, half);
      means.push_back(m);
      vars.push_back(sample_var(start, half, m));
    }
  }
  const double m = static_cast<double>(means.size());
  const double n = static_cast<double>(half);
  const double grand = mean_of(means.data(), means.size());
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1.0);
  const double w = mean_of(vars.data(), vars.size());
  RhatResult r;
  if (!(w > 0.0)) {
    r.undefined = true;
    r.rhat = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  const double var_plus = (n - 1.0) / n * w + b / n;
  r.rhat = std::sqrt(var_plus / w);
  r.below_one = r.rhat < 1.0;
  return r;
}

EssResult effective_sample_size(const ChainDraws& chains) {
  check_chains(chains, 1, 4);
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  const double nd = static_cast<double>(n);
  std::vector<double> means(m);
  double mean_var = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = mean_of(chains[c].data(), n);
    mean_var += sample_var(chains[c].data(), n, means[c]);
  }
  mean_var /= static_cast<double>(m);
  double var_plus = mean_var * (nd - 1.0) / nd;
  if (m > 1) var_plus += sample_var(means.data(), m, mean_of(means.data(), m));
  EssResult r;
  if (!(var_plus > 0.0)) {
    r.degenerate = true;
    r.ess = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  // Mean over chains of the biased lag-t autocovariance.
  auto acov = [&](std::size_t t) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& x = chains[c];
      double a = 0.0;
      for (std::size_t i = 0; i + t < n; ++i) a += (x[i] - means[c]) * (x[i + t] - means[c]);
      s += a / nd;
    }
    return s / static_cast<double>(m);
  };
  auto rho_at = [&](std::size_t t) { return 1.0 - (mean_var - acov(t)) / var_plus; };

  std::vector<double> rho(n + 1, 0.0);
  rho[0] = 1.0;
  double even = 1.0;
  double odd = rho_at(1);
  rho[1] = odd;
  std::size_t t = 1;
  while (t + 5 < n && even + odd > 0.0) {
    even = rho_at(t + 1);
    odd = rho_at(t + 2);
    if (even + odd >= 0.0) {
      rho[t + 1] = even;
      rho[t + 2] = odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (even > 0.0 && max_t + 1 <= n) rho[max_t + 1] = even;
  for (std::size_t u = 1; u + 2 <= max_t; u += 2) {
    if (rho[u + 1] + rho[u + 2] > rho[u - 1] + rho[u]) {
      rho[u + 1] = 0.5 * (rho[u - 1] + rho[u]);
      rho[u + 2] = rho[u + 1];
    }
  }
  const double total = static_cast<double>(m) * nd;
  double tau = -1.0;
  for (std::size_t u = 0; u <= max_t && u <= n; ++u) tau += 2.0 * rho[u];
  if (max_t + 1 <= n) tau += rho[max_t + 1];
  tau = std::max(tau, 1.0 / std::log10(total));
  r.ess = total / tau;
  return r;
}

double mcse_mean(const ChainDraws& chains) {
  const EssResult e = effective_sample_size(chains);
  if (e.degenerate) return 0.0;
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  const double mu = mean_of(all.data(), all.size());
  return std::sqrt(sample_var(all.data(), all.size(), mu) / e.ess);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double silverman_bandwidth(const std::vector<double>& samples) {
  if (samples.size() < 2) return 0.0;
  const double mu = mean_of(samples.data(), samples.size());
  const double sd = std::sqrt(sample_var(samples.data(), samples.size(), mu));
  const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

KdeCurve kde_marginal(const std::vector<double>& samples, double bandwidth, std::size_t points) {
  KdeCurve k;
  if (samples.size() < 2) throw SizingError("density estimate needs at least 2 samples");
  if (points < 2) throw SizingError("density grid needs at least 2 points");
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  if (s.front() == s.back()) {
    k.degenerate = true;
    return k;
  }
  const double h = bandwidth > 0.0 ? bandwidth : silverman_bandwidth(s);
  k.bandwidth = h;
  const double lo = s.front() - 3.0 * h;
  const double hi = s.back() + 3.0 * h;
  const double norm = 1.0 / (static_cast<double>(s.size()) * h * std::sqrt(2.0 * std::numbers::pi));
  k.x.resize(points);
  k.density.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    auto first = std::lower_bound(s.begin(), s.end(), x - 9.0 * h);
    auto last = std::upper_bound(s.begin(), s.end(), x + 9.0 * h);
    double acc = 0.0;
    for (auto it = first; it != last; ++it) {
      const double u = (x - *it) / h;
      acc += std::exp(-0.5 * u * u);
    }
    k.x[i] = x;
    k.density[i] = acc * norm;
  }
  return k;
}

}  // namespace morphouq
