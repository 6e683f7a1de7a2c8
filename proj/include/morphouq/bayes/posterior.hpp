#pragma once
// Posterior over morphodynamic parameters and observation noise with an
// emulator likelihood, plus sampling, predictive envelopes and twin
// experiments.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "morphouq/bayes/sampler.hpp"
#include "morphouq/emulator/mlp.hpp"
#include "morphouq/uq/prior.hpp"

namespace morphouq {

/// Bed-elevation observations attached to emulator output cells.
struct ObservationSet {
  std::vector<std::size_t> cells;  // emulator output indices
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> values;
  /// Generating parameters (prior layout order) of a twin experiment.
  std::optional<std::vector<double>> truth;
  /// Injected noise standard deviation of a twin experiment.
  std::optional<double> noise;

  std::size_t size() const { return values.size(); }
  /// Throws SizingError/ConfigError on inconsistent arrays or non-finite values.
  void validate(std::size_t output_size) const;
  ObservationSet subset(std::span<const std::size_t> rows) const;
};

/// Reads `x,y,z_obs` rows (header optional) and attaches each to the nearest
/// emulator output cell; a point farther than `max_distance` from every cell
/// is an error.
ObservationSet read_observations_csv(const std::filesystem::path& path,
                                     const std::vector<double>& cell_x,
                                     const std::vector<double>& cell_y, double max_distance);
void write_observations_csv(const std::filesystem::path& path, const ObservationSet& obs);

struct SigmaPrior {
  double scale = 0.008;
};

/// log p(zeta, sigma | obs) in unconstrained coordinates: logit for every
/// prior parameter, log for sigma (last coordinate). Jacobian terms included.
class LogPosterior {
 public:
  LogPosterior(const MlpModel& model, const PriorSpec& prior, ObservationSet obs,
               SigmaPrior sigma_prior = {});

  std::size_t dim() const { return prior_.dim() + 1; }
  const PriorSpec& prior() const { return prior_; }
  const ObservationSet& observations() const { return obs_; }
  const MlpModel& model() const { return model_; }
  SigmaPrior sigma_prior() const { return sigma_prior_; }

  /// (zeta..., sigma) from unconstrained coordinates, and back.
  std::vector<double> constrain(std::span<const double> xi) const;
  std::vector<double> unconstrain(std::span<const double> theta) const;

  /// Gaussian log-likelihood at constrained parameters (all constants kept).
  double log_likelihood(std::span<const double> zeta, double sigma) const;
  /// Value and gradient in unconstrained coordinates.
  double operator()(std::span<const double> xi, std::span<double> grad) const;
  LogDensity density() const;

  /// Emulator input vector for prior-ordered parameters.
  std::vector<double> model_input(std::span<const double> zeta) const;

 private:
  const MlpModel& model_;
  PriorSpec prior_;
  ObservationSet obs_;
  SigmaPrior sigma_prior_;
  std::vector<std::size_t> input_map_;  // model input k <- prior column input_map_[k]
};

struct PosteriorSample {
  std::vector<std::string> names;  // prior parameters then "sigma_o"
  std::size_t chains = 0;
  std::size_t draws = 0;
  std::size_t dim = 0;
  /// chains x draws x dim, constrained values.
  std::vector<double> values;
  std::vector<ChainStats> stats;
  std::uint64_t seed = 0;

  double at(std::size_t c, std::size_t d, std::size_t k) const {
    return values[(c * draws + d) * dim + k];
  }
  std::vector<std::vector<double>> chain_draws(std::size_t k) const;
  std::vector<double> pooled(std::size_t k) const;
};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q500 = 0.0;
  double q975 = 0.0;
  double rhat = 0.0;
  double ess = 0.0;
  bool rhat_undefined = false;
  bool ess_degenerate = false;
};

std::vector<ParamSummary> summarize(const PosteriorSample& s);

/// Chains start from distinct prior draws (sigma from its half-normal prior).
/// Throws InferenceError when the sampler fails.
PosteriorSample run_mcmc(const LogPosterior& posterior, const McmcOptions& options);

void save_posterior(const std::filesystem::path& path, const PosteriorSample& s);
PosteriorSample load_posterior(const std::filesystem::path& path);

/// Pointwise quantiles of emulator predictions along chosen output cells.
struct PredictiveEnvelope {
  std::vector<std::size_t> cells;
  std::vector<double> median;
  std::vector<double> lower;  // parameter-only band
  std::vector<double> upper;
  std::vector<double> total_lower;  // with additive observation noise
  std::vector<double> total_upper;
};

/// `thetas` holds rows of (zeta..., sigma) in prior order; `level` is the
/// central band mass (0.95 by default).
PredictiveEnvelope predictive_envelope(const LogPosterior& posterior,
                                       const std::vector<std::vector<double>>& thetas,
                                       const std::vector<std::size_t>& cells, double level,
                                       std::uint64_t seed);

/// Posterior draws thinned to at most `max_draws` rows.
std::vector<std::vector<double>> posterior_rows(const PosteriorSample& s, std::size_t max_draws);
/// Prior draws (sigma from the half-normal prior).
std::vector<std::vector<double>> prior_rows(const PriorSpec& prior, SigmaPrior sigma, std::size_t n,
                                            std::uint64_t seed);

void write_envelope_csv(const std::filesystem::path& path, const PredictiveEnvelope& posterior,
                        const PredictiveEnvelope* prior, const std::vector<double>& cell_x,
                        const std::vector<double>& cell_y);

/// Synthetic observations: values at `cells` plus Gaussian noise.
ObservationSet twin_observations(std::span<const double> field, const std::vector<std::size_t>& cells,
                                 const std::vector<double>& cell_x, const std::vector<double>& cell_y,
                                 double noise, std::uint64_t seed);

/// Emulator output indices with x in [x_lo, x_hi].
std::vector<std::size_t> cells_in_range(const std::vector<double>& cell_x, double x_lo, double x_hi);

struct CountRow {
  std::size_t count = 0;
  std::size_t rep = 0;
  std::vector<ParamSummary> summary;
};

struct CountStudy {
  std::vector<CountRow> rows;
  /// Robustness table: per count and parameter, min and max over reps of
  /// the 2.5% and 97.5% quantiles. Indexed [count][param].
  std::vector<std::vector<std::array<double, 4>>> minmax;
  std::vector<std::size_t> counts;
  std::vector<std::string> names;
};

/// Re-runs inference on random observation subsets. Within a repetition the
/// subsets are nested prefixes of one seeded shuffle of the pool.
CountStudy obs_count_convergence(const MlpModel& model, const PriorSpec& prior,
                                 const ObservationSet& pool, const std::vector<std::size_t>& counts,
                                 std::size_t reps, const McmcOptions& options,
                                 SigmaPrior sigma_prior = {});

void write_count_study_csv(const std::filesystem::path& dir, const CountStudy& study);
void write_summary_csv(const std::filesystem::path& path, const std::vector<ParamSummary>& summary);
void write_draws_csv(const std::filesystem::path& path, const PosteriorSample& s);
void write_kde_csv(const std::filesystem::path& path, const PosteriorSample& s);

}  // namespace morphouq
