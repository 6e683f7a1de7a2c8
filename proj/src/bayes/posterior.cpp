#include "morphouq/bayes/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "morphouq/bayes/diagnostics.hpp"
#include "morphouq/errors.hpp"
#include "morphouq/io/container.hpp"
#include "morphouq/rng.hpp"

namespace morphouq {

namespace {

// log(1 + e^x) without overflow.
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  const double e = std::exp(u);
  return e / (1.0 + e);
}

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  return out;
}

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

}  // namespace

void ObservationSet::validate(std::size_t output_size) const {
  const std::size_t n = values.size();
  if (cells.size() != n || x.size() != n || y.size() != n) {
    throw SizingError("observation arrays differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (cells[i] >= output_size) throw SizingError("observation refers to a cell outside the emulator output");
    if (!std::isfinite(values[i])) throw ConfigError("observation " + std::to_string(i) + " is not finite");
  }
}

ObservationSet ObservationSet::subset(std::span<const std::size_t> rows) const {
  ObservationSet s;
  s.truth = truth;
  s.noise = noise;
  for (std::size_t r : rows) {
    if (r >= size()) throw SizingError("observation subset index out of range");
    s.cells.push_back(cells[r]);
    s.x.push_back(x[r]);
    s.y.push_back(y[r]);
    s.values.push_back(values[r]);
  }
  return s;
}

ObservationSet read_observations_csv(const std::filesystem::path& path,
                                     const std::vector<double>& cell_x,
                                     const std::vector<double>& cell_y, double max_distance) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  ObservationSet obs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    if (!(ss >> x >> y >> z)) {
      if (line_no == 1) continue;  // header
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected x,y,z_obs");
    }
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < cell_x.size(); ++c) {
      const double d = std::hypot(cell_x[c] - x, cell_y[c] - y);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    if (!(best_d <= max_distance)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": observation lies outside the emulator output region");
    }
    obs.cells.push_back(best);
    obs.x.push_back(x);
    obs.y.push_back(y);
    obs.values.push_back(z);
  }
  return obs;
}

void write_observations_csv(const std::filesystem::path& path, const ObservationSet& obs) {
  std::ofstream out = open_csv(path);
  out.precision(17);
  out << "x,y,z_obs\n";
  for (std::size_t i = 0; i < obs.size(); ++i) out << obs.x[i] << ',' << obs.y[i] << ',' << obs.values[i] << '\n';
}

LogPosterior::LogPosterior(const MlpModel& model, const PriorSpec& prior, ObservationSet obs,
                           SigmaPrior sigma_prior)
    : model_(model), prior_(prior), obs_(std::move(obs)), sigma_prior_(sigma_prior) {
  prior_.validate();
  model_.validate();
  obs_.validate(model_.output_size());
  if (!(sigma_prior_.scale > 0.0)) throw ConfigError("sigma prior scale must be positive");
  const std::size_t k = model_.input_size();
  if (model_.input_names.empty()) {
    if (k != prior_.dim()) throw ModelError("emulator inputs do not match the prior dimension");
    input_map_.resize(k);
    std::iota(input_map_.begin(), input_map_.end(), std::size_t{0});
  } else {
    for (const std::string& name : model_.input_names) {
      const int c = prior_.column(param_from_name(name));
      if (c < 0) throw ModelError("emulator input '" + name + "' is not a prior parameter");
      input_map_.push_back(static_cast<std::size_t>(c));
    }
  }
}

std::vector<double> LogPosterior::model_input(std::span<const double> zeta) const {
  std::vector<double> in(input_map_.size());
  for (std::size_t k = 0; k < in.size(); ++k) in[k] = zeta[input_map_[k]];
  return in;
}

std::vector<double> LogPosterior::constrain(std::span<const double> xi) const {
  const std::size_t d = prior_.dim();
  std::vector<double> t(d + 1);
  for (std::size_t i = 0; i < d; ++i) {
    const Interval& b = prior_.bounds[i];
    t[i] = b.lo + (b.hi - b.lo) * sigmoid(xi[i]);
  }
  t[d] = std::exp(xi[d]);
  return t;
}

std::vector<double> LogPosterior::unconstrain(std::span<const double> theta) const {
  const std::size_t d = prior_.dim();
  std::vector<double> xi(d + 1);
  for (std::size_t i = 0; i < d; ++i) {
    const Interval& b = prior_.bounds[i];
    const double s = (theta[i] - b.lo) / (b.hi - b.lo);
    if (!(s > 0.0 && s < 1.0)) throw DomainError("parameter outside the open prior support");
    xi[i] = std::log(s) - std::log1p(-s);
  }
  if (!(theta[d] > 0.0)) throw DomainError("sigma must be positive");
  xi[d] = std::log(theta[d]);
  return xi;
}

double LogPosterior::log_likelihood(std::span<const double> zeta, double sigma) const {
  if (obs_.size() == 0) return 0.0;
  const std::vector<double> out = predict(model_, model_input(zeta));
  double ss = 0.0;
  for (std::size_t i = 0; i < obs_.size(); ++i) {
    const double r = (obs_.values[i] - out[obs_.cells[i]]) / sigma;
    ss += r * r;
  }
  const double n = static_cast<double>(obs_.size());
  return -0.5 * ss - n * std::log(sigma) - n * kHalfLog2Pi;
}

double LogPosterior::operator()(std::span<const double> xi, std::span<double> grad) const {
  const std::size_t d = prior_.dim();
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> zeta(d);
  std::vector<double> s(d);
  double logp = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const Interval& b = prior_.bounds[i];
    s[i] = sigmoid(xi[i]);
    zeta[i] = b.lo + (b.hi - b.lo) * s[i];
    // Uniform density 1/w times the logit Jacobian w s (1 - s).
    logp += -softplus(-xi[i]) - softplus(xi[i]);
    grad[i] = 1.0 - 2.0 * s[i];
  }
  const double v = xi[d];
  const double sigma = std::exp(v);
  double dl_dsigma = 0.0;
  if (obs_.size() > 0) {
    const double inv_var = 1.0 / (sigma * sigma);
    double ss = 0.0;
    const VjpResult r = predict_vjp(model_, model_input(zeta), [&](const std::vector<double>& out) {
      std::vector<double> seed(out.size(), 0.0);
      for (std::size_t i = 0; i < obs_.size(); ++i) {
        const double res = obs_.values[i] - out[obs_.cells[i]];
        ss += res * res;
        seed[obs_.cells[i]] += res * inv_var;
      }
      return seed;
    });
    const double n = static_cast<double>(obs_.size());
    logp += -0.5 * ss * inv_var - n * v - n * kHalfLog2Pi;
    dl_dsigma = ss * inv_var / sigma - n / sigma;
    for (std::size_t k = 0; k < r.gradient.size(); ++k) {
      const std::size_t i = input_map_[k];
      const Interval& b = prior_.bounds[i];
      grad[i] += r.gradient[k] * (b.hi - b.lo) * s[i] * (1.0 - s[i]);
    }
  }
  const double sc = sigma_prior_.scale;
  logp += 0.5 * std::log(2.0 / std::numbers::pi) - std::log(sc) - 0.5 * sigma * sigma / (sc * sc);
  const double dprior = -sigma / (sc * sc);
  logp += v;
  grad[d] = (dl_dsigma + dprior) * sigma + 1.0;
  return logp;
}

LogDensity LogPosterior::density() const {
  return [this](std::span<const double> q, std::span<double> g) { return (*this)(q, g); };
}

std::vector<std::vector<double>> PosteriorSample::chain_draws(std::size_t k) const {
  std::vector<std::vector<double>> out(chains, std::vector<double>(draws));
  for (std::size_t c = 0; c < chains; ++c) {
    for (std::size_t d = 0; d < draws; ++d) out[c][d] = at(c, d, k);
  }
  return out;
}

std::vector<double> PosteriorSample::pooled(std::size_t k) const {
  std::vector<double> v;
  v.reserve(chains * draws);
  for (std::size_t c = 0; c < chains; ++c) {
    for (std::size_t d = 0; d < draws; ++d) v.push_back(at(c, d, k));
  }
  return v;
}

std::vector<ParamSummary> summarize(const PosteriorSample& s) {
  std::vector<ParamSummary> out;
  for (std::size_t k = 0; k < s.dim; ++k) {
    ParamSummary p;
    p.name = k < s.names.size() ? s.names[k] : "x" + std::to_string(k);
    const std::vector<double> v = s.pooled(k);
    p.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - p.mean) * (x - p.mean);
    p.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    p.q025 = quantile(v, 0.025);
    p.q500 = quantile(v, 0.5);
    p.q975 = quantile(v, 0.975);
    const auto chains = s.chain_draws(k);
    if (s.chains >= 2 && s.draws >= 4) {
      const RhatResult r = split_rhat(chains);
      p.rhat = r.rhat;
      p.rhat_undefined = r.undefined;
    } else {
      p.rhat = std::numeric_limits<double>::quiet_NaN();
      p.rhat_undefined = true;
    }
    if (s.draws >= 4) {
      const EssResult e = effective_sample_size(chains);
      p.ess = e.ess;
      p.ess_degenerate = e.degenerate;
    }
    out.push_back(p);
  }
  return out;
}

namespace {

constexpr std::size_t kPolishStarts = 8;
constexpr std::size_t kPolishSteps = 300;

/// Adam ascent on the log density; keeps the best point visited.
double polish(const LogDensity& density, std::vector<double>& xi) {
  const std::size_t n = xi.size();
  std::vector<double> g(n), m(n, 0.0), v(n, 0.0), x = xi;
  double best = density(xi, g);
  if (!std::isfinite(best)) return -std::numeric_limits<double>::infinity();
  const double lr = 0.05, b1 = 0.9, b2 = 0.999;
  for (std::size_t t = 1; t <= kPolishSteps; ++t) {
    const double lp = density(x, g);
    if (!std::isfinite(lp)) break;
    if (lp > best) {
      best = lp;
      xi = x;
    }
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      x[i] += lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + 1e-12);
    }
  }
  return best;
}

}  // namespace

PosteriorSample run_mcmc(const LogPosterior& posterior, const McmcOptions& options) {
  if (options.chains < 2) throw InferenceError("at least two chains are required");
  const PriorSpec& prior = posterior.prior();
  const std::size_t d = prior.dim();
  if (options.init_draws == 0) throw InferenceError("init_draws must be positive");
  const LogDensity density = posterior.density();
  std::vector<double> grad(d + 1);
  std::vector<Eigen::VectorXd> inits;
  for (std::size_t c = 0; c < options.chains; ++c) {
    Rng rng = make_rng(options.seed, 0x494e4954ULL + c);
    std::vector<std::pair<double, std::vector<double>>> scored;
    for (std::size_t k = 0; k < options.init_draws; ++k) {
      std::vector<double> theta(d + 1);
      for (std::size_t i = 0; i < d; ++i) {
        const Interval& b = prior.bounds[i];
        double u = uniform01(rng);
        while (u == 0.0) u = uniform01(rng);
        theta[i] = b.lo + (b.hi - b.lo) * u;
      }
      double sigma = 0.0;
      while (!(sigma > 1e-6)) sigma = std::abs(standard_normal(rng)) * posterior.sigma_prior().scale;
      theta[d] = sigma;
      std::vector<double> xi = posterior.unconstrain(theta);
      const double lp = density(xi, grad);
      scored.emplace_back(std::isfinite(lp) ? lp : -std::numeric_limits<double>::infinity(), std::move(xi));
    }
    const std::size_t starts = std::min(kPolishStarts, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(starts), scored.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> best_xi = scored.front().second;
    for (std::size_t k = 0; k < starts; ++k) {
      std::vector<double> xi = scored[k].second;
      const double lp = polish(density, xi);
      if (lp > best) {
        best = lp;
        best_xi = std::move(xi);
      }
    }
    inits.emplace_back(Eigen::Map<const Eigen::VectorXd>(best_xi.data(), static_cast<Eigen::Index>(best_xi.size())));
  }
  const ChainSet cs = run_chains(density, inits, options);
  PosteriorSample s;
  for (Param p : prior.layout) s.names.emplace_back(param_name(p));
  s.names.emplace_back("sigma_o");
  s.chains = cs.chains;
  s.draws = cs.draws;
  s.dim = cs.dim;
  s.stats = cs.stats;
  s.seed = options.seed;
  s.values.resize(cs.values.size());
  for (std::size_t r = 0; r < cs.chains * cs.draws; ++r) {
    const std::vector<double> t =
        posterior.constrain(std::span<const double>(cs.values.data() + r * cs.dim, cs.dim));
    std::copy(t.begin(), t.end(), s.values.begin() + static_cast<std::ptrdiff_t>(r * cs.dim));
  }
  return s;
}

void save_posterior(const std::filesystem::path& path, const PosteriorSample& s) {
  io::Container c;
  c.kind = "posterior";
  nlohmann::json stats = nlohmann::json::array();
  for (const ChainStats& st : s.stats) {
    std::vector<double> inv(st.inverse_mass.data(), st.inverse_mass.data() + st.inverse_mass.size());
    stats.push_back({{"step_size", st.step_size},
                     {"mean_accept", st.mean_accept},
                     {"divergences", st.divergences},
                     {"max_depth_hits", st.max_depth_hits},
                     {"leapfrogs", st.leapfrogs},
                     {"inverse_mass", inv}});
  }
  c.meta = {{"names", s.names}, {"chains", s.chains}, {"draws", s.draws},
            {"dim", s.dim},     {"seed", s.seed},     {"stats", stats}};
  c.payload = s.values;
  io::write_container(path, c);
}

PosteriorSample load_posterior(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, "posterior");
  PosteriorSample s;
  try {
    s.names = c.meta.at("names").get<std::vector<std::string>>();
    s.chains = c.meta.at("chains").get<std::size_t>();
    s.draws = c.meta.at("draws").get<std::size_t>();
    s.dim = c.meta.at("dim").get<std::size_t>();
    s.seed = c.meta.at("seed").get<std::uint64_t>();
    for (const auto& j : c.meta.at("stats")) {
      ChainStats st;
      st.step_size = j.at("step_size").get<double>();
      st.mean_accept = j.at("mean_accept").get<double>();
      st.divergences = j.at("divergences").get<std::size_t>();
      st.max_depth_hits = j.at("max_depth_hits").get<std::size_t>();
      st.leapfrogs = j.at("leapfrogs").get<std::size_t>();
      const auto inv = j.at("inverse_mass").get<std::vector<double>>();
      const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(inv.size()))));
      st.inverse_mass = Eigen::Map<const Eigen::MatrixXd>(inv.data(), n, n);
      s.stats.push_back(std::move(st));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed posterior metadata (" + e.what() + ")");
  }
  if (c.payload.size() != s.chains * s.draws * s.dim) throw FormatError(path.string() + ": payload size mismatch");
  s.values = c.payload;
  return s;
}

PredictiveEnvelope predictive_envelope(const LogPosterior& posterior,
                                       const std::vector<std::vector<double>>& thetas,
                                       const std::vector<std::size_t>& cells, double level,
                                       std::uint64_t seed) {
  if (thetas.empty()) throw SizingError("predictive envelope needs at least one draw");
  if (!(level > 0.0 && level < 1.0)) throw SizingError("band level must lie in (0, 1)");
  const std::size_t d = posterior.prior().dim();
  const std::size_t nc = cells.size();
  std::vector<std::vector<double>> param(nc);
  std::vector<std::vector<double>> total(nc);
  Rng rng = make_rng(seed, 0x50505244ULL);
  for (const auto& t : thetas) {
    const std::vector<double> out =
        predict(posterior.model(), posterior.model_input(std::span<const double>(t.data(), d)));
    for (std::size_t i = 0; i < nc; ++i) {
      const double v = out.at(cells[i]);
      param[i].push_back(v);
      total[i].push_back(v + t[d] * standard_normal(rng));
    }
  }
  const double a = 0.5 * (1.0 - level);
  PredictiveEnvelope e;
  e.cells = cells;
  for (std::size_t i = 0; i < nc; ++i) {
    e.median.push_back(quantile(param[i], 0.5));
    e.lower.push_back(quantile(param[i], a));
    e.upper.push_back(quantile(param[i], 1.0 - a));
    e.total_lower.push_back(std::min(quantile(total[i], a), e.lower.back()));
    e.total_upper.push_back(std::max(quantile(total[i], 1.0 - a), e.upper.back()));
  }
  return e;
}

std::vector<std::vector<double>> posterior_rows(const PosteriorSample& s, std::size_t max_draws) {
  const std::size_t n = s.chains * s.draws;
  const std::size_t take = std::min(n, std::max<std::size_t>(1, max_draws));
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t r = k * n / take;
    rows.emplace_back(s.values.begin() + static_cast<std::ptrdiff_t>(r * s.dim),
                      s.values.begin() + static_cast<std::ptrdiff_t>((r + 1) * s.dim));
  }
  return rows;
}

std::vector<std::vector<double>> prior_rows(const PriorSpec& prior, SigmaPrior sigma, std::size_t n,
                                            std::uint64_t seed) {
  const std::vector<double> design = sample_prior(prior, n, seed);
  Rng rng = make_rng(seed, 0x5349474dULL);
  std::vector<std::vector<double>> rows;
  const std::size_t d = prior.dim();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> r(design.begin() + static_cast<std::ptrdiff_t>(i * d),
                          design.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    r.push_back(std::abs(standard_normal(rng)) * sigma.scale);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_envelope_csv(const std::filesystem::path& path, const PredictiveEnvelope& post,
                        const PredictiveEnvelope* prior, const std::vector<double>& cell_x,
                        const std::vector<double>& cell_y) {
  std::ofstream out = open_csv(path);
  out << "cell,x,y,median,lower,upper,total_lower,total_upper";
  if (prior != nullptr) out << ",prior_median,prior_lower,prior_upper";
  out << '\n';
  for (std::size_t i = 0; i < post.cells.size(); ++i) {
    const std::size_t c = post.cells[i];
    out << c << ',' << cell_x.at(c) << ',' << cell_y.at(c) << ',' << post.median[i] << ','
        << post.lower[i] << ',' << post.upper[i] << ',' << post.total_lower[i] << ','
        << post.total_upper[i];
    if (prior != nullptr) out << ',' << prior->median[i] << ',' << prior->lower[i] << ',' << prior->upper[i];
    out << '\n';
  }
}

ObservationSet twin_observations(std::span<const double> field, const std::vector<std::size_t>& cells,
                                 const std::vector<double>& cell_x, const std::vector<double>& cell_y,
                                 double noise, std::uint64_t seed) {
  if (!(noise >= 0.0)) throw ConfigError("noise level must be non-negative");
  ObservationSet obs;
  Rng rng = make_rng(seed, 0x5457494eULL);
  for (std::size_t c : cells) {
    if (c >= field.size()) throw SizingError("observation cell outside the field");
    obs.cells.push_back(c);
    obs.x.push_back(cell_x.at(c));
    obs.y.push_back(cell_y.at(c));
    obs.values.push_back(field[c] + noise * standard_normal(rng));
  }
  obs.noise = noise;
  return obs;
}

std::vector<std::size_t> cells_in_range(const std::vector<double>& cell_x, double x_lo, double x_hi) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < cell_x.size(); ++c) {
    if (cell_x[c] >= x_lo && cell_x[c] <= x_hi) out.push_back(c);
  }
  return out;
}

CountStudy obs_count_convergence(const MlpModel& model, const PriorSpec& prior,
                                 const ObservationSet& pool, const std::vector<std::size_t>& counts,
                                 std::size_t reps, const McmcOptions& options, SigmaPrior sigma_prior) {
  if (counts.empty()) throw SizingError("no observation counts given");
  if (reps == 0) throw SizingError("at least one repetition is required");
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0 || counts[i] > pool.size()) {
      throw SizingError("observation count " + std::to_string(counts[i]) + " exceeds the pool of " +
                        std::to_string(pool.size()));
    }
    if (i > 0 && counts[i] <= counts[i - 1]) throw SizingError("observation counts must ascend");
  }
  CountStudy study;
  study.counts = counts;
  for (Param p : prior.layout) study.names.emplace_back(param_name(p));
  study.names.emplace_back("sigma_o");
  const std::size_t dim = study.names.size();
  const double inf = std::numeric_limits<double>::infinity();
  study.minmax.assign(counts.size(), std::vector<std::array<double, 4>>(dim, {inf, -inf, inf, -inf}));
  for (std::size_t rep = 0; rep < reps; ++rep) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(options.seed, 0x434f554eULL + rep);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
    McmcOptions o = options;
    o.seed = splitmix64(options.seed + rep);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      const ObservationSet sub = pool.subset(std::span<const std::size_t>(order.data(), counts[k]));
      const LogPosterior lp(model, prior, sub, sigma_prior);
      const PosteriorSample s = run_mcmc(lp, o);
      CountRow row{counts[k], rep, summarize(s)};
      for (std::size_t j = 0; j < dim; ++j) {
        auto& mm = study.minmax[k][j];
        mm[0] = std::min(mm[0], row.summary[j].q025);
        mm[1] = std::max(mm[1], row.summary[j].q025);
        mm[2] = std::min(mm[2], row.summary[j].q975);
        mm[3] = std::max(mm[3], row.summary[j].q975);
      }
      study.rows.push_back(std::move(row));
    }
  }
  return study;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<ParamSummary>& summary) {
  std::ofstream out = open_csv(path);
  out << "param,mean,sd,q025,q500,q975,rhat,ess,rhat_undefined,ess_degenerate\n";
  for (const ParamSummary& p : summary) {
    out << p.name << ',' << p.mean << ',' << p.sd << ',' << p.q025 << ',' << p.q500 << ',' << p.q975
        << ',' << p.rhat << ',' << p.ess << ',' << int(p.rhat_undefined) << ',' << int(p.ess_degenerate)
        << '\n';
  }
}

void write_count_study_csv(const std::filesystem::path& dir, const CountStudy& study) {
  {
    std::ofstream out = open_csv(dir / "obs_count_convergence.csv");
    out << "count,rep,param,mean,q025,q975,width\n";
    for (const CountRow& r : study.rows) {
      for (const ParamSummary& p : r.summary) {
        out << r.count << ',' << r.rep << ',' << p.name << ',' << p.mean << ',' << p.q025 << ','
            << p.q975 << ',' << p.q975 - p.q025 << '\n';
      }
    }
  }
  std::ofstream out = open_csv(dir / "obs_count_robustness.csv");
  out << "count,param,q025_min,q025_max,q975_min,q975_max\n";
  for (std::size_t k = 0; k < study.counts.size(); ++k) {
    for (std::size_t j = 0; j < study.names.size(); ++j) {
      const auto& mm = study.minmax[k][j];
      out << study.counts[k] << ',' << study.names[j] << ',' << mm[0] << ',' << mm[1] << ',' << mm[2]
          << ',' << mm[3] << '\n';
    }
  }
}

void write_draws_csv(const std::filesystem::path& path, const PosteriorSample& s) {
  std::ofstream out = open_csv(path);
  out << "chain,draw";
  for (const auto& n : s.names) out << ',' << n;
  out << '\n';
  for (std::size_t c = 0; c < s.chains; ++c) {
    for (std::size_t d = 0; d < s.draws; ++d) {
      out << c << ',' << d;
      for (std::size_t k = 0; k < s.dim; ++k) out << ',' << s.at(c, d, k);
      out << '\n';
    }
  }
}

void write_kde_csv(const std::filesystem::path& path, const PosteriorSample& s) {
  std::ofstream out = open_csv(path);
  out << "param,x,density\n";
  for (std::size_t k = 0; k < s.dim; ++k) {
    const KdeCurve kde = kde_marginal(s.pooled(k));
    for (std::size_t i = 0; i < kde.x.size(); ++i) {
      out << s.names[k] << ',' << kde.x[i] << ',' << kde.density[i] << '\n';
    }
  }
}

}  // namespace morphouq
