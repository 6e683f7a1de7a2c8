#include "morphouq/pipeline/workflow.hpp"

#include <algorithm>

#include "morphouq/errors.hpp"

namespace morphouq {

std::vector<std::string> input_names(const PriorSpec& prior) {
  std::vector<std::string> names;
  for (Param p : prior.layout) names.emplace_back(param_name(p));
  return names;
}

std::vector<std::size_t> field_columns(const McDataset& ds, double x_lo, double x_hi) {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < ds.field_size(); ++c) {
    if (ds.field_x[c] < x_lo || ds.field_x[c] > x_hi) continue;
    double lo = 1e300;
    double hi = -1e300;
    for (std::size_t i = 0; i < ds.rows; ++i) {
      if (ds.status[i] == 0) continue;
      lo = std::min(lo, ds.field_row(i)[c]);
      hi = std::max(hi, ds.field_row(i)[c]);
    }
    if (hi > lo) out.push_back(c);
  }
  return out;
}

TrainingSet training_set(const McDataset& ds, const std::vector<std::size_t>& rows,
                         const std::vector<std::size_t>& columns) {
  TrainingSet s;
  s.rows = rows.size();
  s.in = ds.dim();
  s.out = columns.size();
  s.inputs.reserve(s.rows * s.in);
  s.outputs.reserve(s.rows * s.out);
  for (std::size_t i : rows) {
    if (i >= ds.rows) throw SizingError("training row outside the dataset");
    s.inputs.insert(s.inputs.end(), ds.design_row(i), ds.design_row(i) + s.in);
    for (std::size_t c : columns) s.outputs.push_back(ds.field_row(i)[c]);
  }
  return s;
}

EmulatorBuild build_emulator(const McDataset& ds, const EmulatorOptions& options,
                             const std::function<void(std::size_t, double, double)>& progress) {
  EmulatorBuild b;
  b.columns = field_columns(ds, options.x_lo, options.x_hi);
  if (b.columns.empty()) throw SizingError("no varying field cells in the requested x range");
  b.split = split_dataset(ds, options.val_frac, options.test_frac, options.split_seed);
  const TrainingSet tr = training_set(ds, b.split.train, b.columns);
  const TrainingSet va = training_set(ds, b.split.val, b.columns);
  const TrainingSet te = training_set(ds, b.split.test, b.columns);
  TrainResult r = train(tr, va, options.hyper, input_names(ds.prior), progress);
  b.model = std::move(r.model);
  b.report = std::move(r.report);
  for (std::size_t c : b.columns) {
    b.model.output_x.push_back(ds.field_x[c]);
    b.model.output_y.push_back(ds.field_y[c]);
  }
  b.q2 = q2_field(b.model, te, options.printed_q2);
  b.report.q2 = b.q2.q2;
  return b;
}

std::vector<double> parameter_vector(const PriorSpec& prior, const std::map<std::string, double>& named) {
  std::vector<double> v(prior.dim());
  for (std::size_t k = 0; k < prior.dim(); ++k) v[k] = 0.5 * (prior.bounds[k].lo + prior.bounds[k].hi);
  for (const auto& [name, value] : named) {
    const int col = prior.column(param_from_name(name));
    if (col < 0) throw ConfigError("parameter '" + name + "' is not in the prior");
    if (!prior.bounds[col].contains(value)) {
      throw ConfigError("parameter '" + name + "' outside its prior bounds");
    }
    v[col] = value;
  }
  return v;
}

std::map<std::string, double> reference_truth() {
  return {{"alpha_mpm", 17.33}, {"beta2", 0.9}, {"beta", 2.5}, {"alpha_ks", 3.8}};
}

std::vector<double> solver_field(const SimulationResult& r, const Grid& grid, const MlpModel& model) {
  if (r.zb_final.size() != grid.size()) throw SizingError("simulation does not match the grid");
  std::vector<double> out;
  out.reserve(model.output_x.size());
  for (std::size_t c = 0; c < model.output_x.size(); ++c) {
    const auto k = grid.locate(model.output_x[c], model.output_y[c]);
    if (!k) throw DomainError("emulator output cell outside the simulation grid");
    out.push_back(r.zb_final[*k]);
  }
  return out;
}

}  // namespace morphouq
