#pragma once
// Moment-independent (Borgonovo) sensitivity indices from a Monte Carlo
// sample, estimated by rank partitioning of each input and histogram
// densities of the output on a common grid.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace morphouq {

/// Row-major N x d view of input samples.
struct InputMatrix {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double at(std::size_t i, std::size_t c) const { return data[i * cols + c]; }
};

struct DeltaOptions {
  std::size_t partitions = 32;
  std::size_t bins = 100;
  /// Removes the finite-sample bias of the histogram L1 distance by
  /// extrapolating from the mean estimates over disjoint halves and quarters, with the
  /// bias modelled as k1 n^-1/2 + k2 n^-1.
  bool bias_correction = true;
};

struct DeltaResult {
  std::vector<double> delta;
  /// Output has zero variance; all indices are reported as zero.
  bool degenerate = false;
};

/// Raw partition estimator for one input, no bias correction. `subset`
/// selects rows (all rows when empty).
double delta_raw(const InputMatrix& x, std::span<const double> y, std::size_t input,
                 std::size_t partitions, std::size_t bins,
                 std::span<const std::size_t> subset = {});

/// Throws SizingError when N < 50 * partitions.
DeltaResult borgonovo_delta(const InputMatrix& x, std::span<const double> y,
                            const DeltaOptions& options = {});

struct DeltaEstimate {
  std::vector<double> delta;
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.9;
  std::size_t sample_size = 0;
  std::size_t partitions = 0;
  bool degenerate = false;
};

/// Percentile bootstrap over rows. The interval is widened if needed so
/// that it contains the point estimate.
DeltaEstimate bootstrap_ci(const InputMatrix& x, std::span<const double> y,
                           const DeltaOptions& options, std::size_t reps, double level,
                           std::uint64_t seed);

/// Bootstrap estimates on nested prefixes of one seeded shuffle of the rows.
std::vector<DeltaEstimate> convergence_curve(const InputMatrix& x, std::span<const double> y,
                                             const std::vector<std::size_t>& sizes,
                                             const DeltaOptions& options, std::size_t reps,
                                             double level, std::uint64_t seed);

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& input_names,
                           const std::vector<DeltaEstimate>& curve);

}  // namespace morphouq
