#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "morphouq/domain/config.hpp"
#include "morphouq/domain/grid.hpp"
#include "morphouq/model/simulation.hpp"
#include "morphouq/uq/prior.hpp"

namespace morphouq {

struct Provenance {
  std::uint64_t seed = 0;
  std::string grid_hash;
  std::string config_hash;
};

/// Monte Carlo database: parameter draws paired with simulated outputs.
/// Row i of every output block comes from row i of the design; failed rows
/// stay in place with NaN outputs and status 0.
struct McDataset {
  PriorSpec prior;
  std::size_t rows = 0;
  std::vector<double> design;  // rows x prior.dim()

  /// Grid cells of the stored bed field and their centres.
  std::vector<std::size_t> field_cells;
  std::vector<double> field_x;
  std::vector<double> field_y;
  std::vector<double> field_initial;  // initial bed at the stored cells
  std::vector<double> outputs_field;  // rows x field_cells.size()

  std::vector<std::string> probe_names;
  std::vector<double> times;
  std::vector<double> outputs_probe;  // rows x (probes * times), probe-major per row
  std::vector<double> outputs_depth;  // water depth, same layout as outputs_probe

  std::vector<std::uint8_t> status;
  std::vector<std::string> failures;

  Provenance provenance;
  nlohmann::json config = nlohmann::json::object();

  std::size_t dim() const { return prior.dim(); }
  std::size_t field_size() const { return field_cells.size(); }
  std::size_t probe_size() const { return probe_names.size() * times.size(); }
  std::size_t ok_count() const;
  const double* design_row(std::size_t i) const { return design.data() + i * dim(); }
  const double* field_row(std::size_t i) const { return outputs_field.data() + i * field_size(); }
  const double* probe_row(std::size_t i) const { return outputs_probe.data() + i * probe_size(); }
  const double* depth_row(std::size_t i) const { return outputs_depth.data() + i * probe_size(); }
};

/// Axis-aligned window of active cells stored as the output field.
struct FieldWindow {
  double x_lo = -1e300;
  double x_hi = 1e300;
  double y_lo = -1e300;
  double y_hi = 1e300;

  std::vector<std::size_t> cells(const Grid& grid) const;
};

struct BatchOptions {
  unsigned jobs = 1;
  /// Seed the design was drawn with, recorded as provenance.
  std::uint64_t design_seed = 0;
  FieldWindow window;
  /// When set, each row's SimulationResult is kept here and reused on rerun.
  std::filesystem::path row_dir;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

/// Runs the forward model for every design row (columns follow prior.layout;
/// parameters outside the layout keep config.params). Output is identical for
/// any number of jobs.
McDataset run_batch(const PriorSpec& prior, const std::vector<double>& design, const Grid& grid,
                    const RunConfig& config, const BatchOptions& options = {});

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Disjoint train/val/test indices over successful rows, with |val| and
/// |test| given as fractions of |train|. Throws SizingError when any part
/// would be empty.
Split split_dataset(const McDataset& ds, double val_frac, double test_frac, std::uint64_t seed);

void save_dataset(const std::filesystem::path& path, const McDataset& ds);
McDataset load_dataset(const std::filesystem::path& path);

/// Differences between the dataset's recorded provenance and the current
/// grid/config, as human-readable warnings (empty when consistent).
std::vector<std::string> provenance_warnings(const McDataset& ds, const Grid& grid,
                                             const RunConfig& config);

/// design.csv, field.csv and probes.csv in `dir`.
void export_dataset_csv(const std::filesystem::path& dir, const McDataset& ds);

}  // namespace morphouq
