#pragma once
// Borgonovo indices evaluated independently at every stored bed cell or at
// every probe/time pair of a Monte Carlo dataset, plus parameter screening.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "morphouq/sensitivity/borgonovo.hpp"
#include "morphouq/uq/dataset.hpp"

namespace morphouq {

enum class SensitivityTarget { Field, Probe };

struct FieldSensitivityOptions {
  DeltaOptions delta;
  /// Bootstrap replicates per location; 0 skips the intervals.
  std::size_t reps = 0;
  double level = 0.9;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  /// A probe is wet at an instant when its depth exceeds this in some run.
  double h_dry = 1e-6;
  /// Probe target only: evaluate every k-th output instant.
  std::size_t time_stride = 1;
};

struct SensitivityMap {
  SensitivityTarget target = SensitivityTarget::Field;
  std::vector<std::string> inputs;
  // Field target: cell centres. Probe target: probe name and time.
  std::vector<double> x;
  std::vector<double> y;
  std::vector<std::string> probe;
  std::vector<double> t;
  std::vector<double> delta;  // locations x inputs
  std::vector<double> lower;
  std::vector<double> upper;
  /// Output constant over all runs; delta reported as 0.
  std::vector<std::uint8_t> degenerate;
  /// Probe dry in every run at that instant; delta is NaN.
  std::vector<std::uint8_t> undefined;
  std::size_t rows_used = 0;

  std::size_t size() const { return degenerate.size(); }
  double at(std::size_t loc, std::size_t input) const { return delta[loc * inputs.size() + input]; }
};

/// Uses the successful rows only. Throws SizingError when too few remain
/// for the partition count.
SensitivityMap field_sensitivity(const McDataset& ds, SensitivityTarget target,
                                 const FieldSensitivityOptions& options = {});

struct ScreeningEntry {
  std::string input;
  /// Median over locations that are neither degenerate nor undefined.
  double median = 0.0;
  bool negligible = false;
};

/// Inputs ranked by decreasing domain-median delta.
std::vector<ScreeningEntry> screen(const SensitivityMap& map, double threshold = 0.05);

void write_sensitivity_csv(const std::filesystem::path& path, const SensitivityMap& map);
void write_screening_csv(const std::filesystem::path& path,
                         const std::vector<ScreeningEntry>& ranking, double threshold);

}  // namespace morphouq
