#pragma once
// Convergence diagnostics and density estimates for MCMC output.

#include <cstdint>
#include <vector>

namespace morphouq {

/// One scalar quantity across chains: chains[c][d].
using ChainDraws = std::vector<std::vector<double>>;

struct RhatResult {
  double rhat = 0.0;
  /// Zero within-chain variance; rhat is NaN.
  bool undefined = false;
  /// Between-half variance below its expectation (rhat < 1), e.g. duplicated chains.
  bool below_one = false;
};

/// Split R-hat: every chain is halved and the between/within variance
/// ratio is taken over the halves. Needs >= 2 chains of >= 4 equal-length draws.
RhatResult split_rhat(const ChainDraws& chains);

struct EssResult {
  double ess = 0.0;
  /// Zero variance; ess is NaN.
  bool degenerate = false;
};

/// Multi-chain effective sample size from autocorrelations truncated at the
/// first non-positive sum of an adjacent pair (Geyer initial positive
/// sequence, made monotone).
EssResult effective_sample_size(const ChainDraws& chains);

/// Monte Carlo standard error of the mean, sd / sqrt(ESS).
double mcse_mean(const ChainDraws& chains);

struct KdeCurve {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth = 0.0;
  /// All samples identical; the curve is empty.
  bool degenerate = false;
};

/// Silverman rule of thumb: 0.9 min(sd, IQR / 1.34) n^-1/5.
double silverman_bandwidth(const std::vector<double>& samples);

/// Gaussian-kernel density on `points` equally spaced nodes spanning the
/// sample range extended by 3 bandwidths. A bandwidth <= 0 selects Silverman.
KdeCurve kde_marginal(const std::vector<double>& samples, double bandwidth = 0.0,
                      std::size_t points = 512);

/// Empirical quantile with linear interpolation (type 7); sorts a copy.
double quantile(std::vector<double> v, double q);

}  // namespace morphouq
