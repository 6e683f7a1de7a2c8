#pragma once
// Glue between pipeline stages: emulator training data from a Monte Carlo
// dataset, and truth fields for twin experiments.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "morphouq/domain/grid.hpp"
#include "morphouq/emulator/mlp.hpp"
#include "morphouq/model/simulation.hpp"
#include "morphouq/uq/dataset.hpp"

namespace morphouq {

std::vector<std::string> input_names(const PriorSpec& prior);

/// Stored field columns with x in [x_lo, x_hi] whose value varies over the
/// successful rows.
std::vector<std::size_t> field_columns(const McDataset& ds, double x_lo, double x_hi);

/// Design rows as inputs, chosen field columns as outputs.
TrainingSet training_set(const McDataset& ds, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& columns);

struct EmulatorOptions {
  TrainHyper hyper;
  double val_frac = 0.2;
  double test_frac = 0.2;
  double x_lo = -1e300;
  double x_hi = 1e300;
  /// Seed of the train/validation/test split.
  std::uint64_t split_seed = 0;
  bool printed_q2 = false;
};

struct EmulatorBuild {
  MlpModel model;
  TrainReport report;
  Q2Result q2;
  Split split;
  std::vector<std::size_t> columns;
};

/// Splits the dataset, trains, and scores Q2 on the test rows. Output cell
/// coordinates are stored in the model.
EmulatorBuild build_emulator(const McDataset& ds, const EmulatorOptions& options,
                             const std::function<void(std::size_t, double, double)>& progress = {});

/// Prior-ordered parameter vector: `named` values where given, otherwise
/// the interval midpoint. Throws ConfigError on unknown or out-of-range names.
std::vector<double> parameter_vector(const PriorSpec& prior, const std::map<std::string, double>& named);

/// Reference draw used for twin experiments.
std::map<std::string, double> reference_truth();

/// Solver bed elevation at the model output cells (cell containing each
/// output centre). Throws DomainError when an output lies off the grid.
std::vector<double> solver_field(const SimulationResult& r, const Grid& grid,
                                 const MlpModel& model);

}  // namespace morphouq
