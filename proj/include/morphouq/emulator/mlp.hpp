#pragma once
// Fully connected feed-forward emulator: min-max scaled inputs, rectifier
// hidden layers, identity output layer, min-max scaled outputs.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace morphouq {

/// Per-feature affine map to [0, 1]. Constant features are flagged and pass
/// through unchanged.
struct Scaling {
  std::vector<double> min;
  std::vector<double> max;
  std::vector<std::uint8_t> constant;

  std::size_t size() const { return min.size(); }
  /// Bounds over `rows` row-major samples of width `width`.
  static Scaling fit(std::span<const double> data, std::size_t width);
  /// Returns true when some feature lies outside its bounds.
  bool scale(std::span<const double> in, std::span<double> out) const;
  void unscale(std::span<const double> in, std::span<double> out) const;
  /// d(unscaled)/d(scaled) for feature i.
  double span(std::size_t i) const { return constant[i] != 0 ? 1.0 : max[i] - min[i]; }
  double offset(std::size_t i) const { return constant[i] != 0 ? 0.0 : min[i]; }
};

struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  bool relu = true;
  std::vector<double> w;  // out x in, row-major
  std::vector<double> b;
};

struct MlpModel {
  std::vector<std::string> input_names;
  Scaling input_scaling;
  Scaling output_scaling;
  std::vector<Layer> layers;
  /// Optional coordinates of the output cells.
  std::vector<double> output_x;
  std::vector<double> output_y;

  std::size_t input_size() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_size() const { return layers.empty() ? 0 : layers.back().out; }
  std::vector<std::size_t> hidden() const;
  std::size_t parameter_count() const;

  /// Zero weights, identity scalings. Throws ModelError on empty sizes.
  static MlpModel zeros(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out);
  /// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  static MlpModel random(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                         std::uint64_t seed);
  /// Checks layer chaining and scaling widths; throws ModelError.
  void validate() const;
};

/// Physical-unit prediction for one input vector. Throws ModelError on a
/// size mismatch. `extrapolated` is set when an input lies outside the
/// training bounds.
std::vector<double> predict(const MlpModel& model, std::span<const double> input,
                            bool* extrapolated = nullptr);

/// Row-major batch prediction in physical units.
std::vector<double> predict_batch(const MlpModel& model, std::span<const double> inputs,
                                  std::size_t rows);

/// Jacobian d(output)/d(input), output_size x input_size row-major, by
/// reverse-mode differentiation (rectifier subgradient 0 at the kink).
std::vector<double> input_gradient(const MlpModel& model, std::span<const double> input);

/// Prediction together with the vector-Jacobian product seed^T d(output)/d(input).
struct VjpResult {
  std::vector<double> output;
  std::vector<double> gradient;
};
VjpResult predict_vjp(const MlpModel& model, std::span<const double> input,
                      std::span<const double> seed);
/// As above with the seed computed from the prediction (one forward pass).
VjpResult predict_vjp(const MlpModel& model, std::span<const double> input,
                      const std::function<std::vector<double>(const std::vector<double>&)>& seed_of);

struct TrainHyper {
  std::vector<std::size_t> hidden{113, 88, 116, 128, 124};
  std::size_t epochs = 5000;
  std::size_t batch = 64;
  double learning_rate = 1e-4;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
};

/// Hidden layer widths of a named topology preset ("paper5").
std::vector<std::size_t> topology_preset(const std::string& name);

/// Row-major supervised data in physical units.
struct TrainingSet {
  std::vector<double> inputs;
  std::vector<double> outputs;
  std::size_t rows = 0;
  std::size_t in = 0;
  std::size_t out = 0;
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch, scaled MSE
  std::vector<double> val_loss;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  /// Mean absolute validation error of the retained model, physical units.
  double mae = 0.0;
  std::vector<double> q2;  // filled by the caller from a test set
  TrainHyper hyper;

  nlohmann::json to_json() const;
};

struct TrainResult {
  MlpModel model;
  TrainReport report;
};

/// Adam on mean-square error in scaled units with seeded per-epoch shuffles.
/// Scalings come from the training set only. Rows are put into a canonical
/// content order first, so the result does not depend on their given order.
/// Throws TrainingError (with the epoch) when the loss becomes non-finite.
TrainResult train(const TrainingSet& train_set, const TrainingSet& val_set, const TrainHyper& hyper,
                  const std::vector<std::string>& input_names = {},
                  const std::function<void(std::size_t epoch, double train, double val)>& progress = {});

/// Mean-square error in the model's scaled output units.
double scaled_mse(const MlpModel& model, const TrainingSet& set);
double mean_absolute_error(const MlpModel& model, const TrainingSet& set);

/// Predictivity per output: 1 - SSE / sum (M - mean M)^2. With `printed`
/// the denominator uses emulator deviations from the mean of M instead.
/// Zero-variance outputs give NaN and are flagged in `undefined`.
struct Q2Result {
  std::vector<double> q2;
  std::vector<std::uint8_t> undefined;
  /// Median over defined outputs (NaN if none).
  double median() const;
};
Q2Result q2_field(const MlpModel& model, const TrainingSet& test, bool printed = false);

/// Fraction of test predictions inside [min - 3 sd, max + 3 sd] of the
/// training outputs, per output column pooled over rows.
double physical_range_fraction(const MlpModel& model, const TrainingSet& train_set,
                               const TrainingSet& test);

struct TopologyTrial {
  std::vector<std::size_t> hidden;
  double val_loss = 0.0;
};

struct TopologySearch {
  std::vector<TopologyTrial> trials;
  std::size_t best = 0;
};

/// Seeded random search over 1..max_layers hidden layers of min_units..max_units
/// units, minimising validation loss. Trials run concurrently on `jobs`
/// workers; the log is in trial order.
TopologySearch topology_search(const TrainingSet& train_set, const TrainingSet& val_set,
                               TrainHyper hyper, std::size_t trials, unsigned jobs = 1,
                               std::size_t max_layers = 10, std::size_t min_units = 4,
                               std::size_t max_units = 128);

void save_model(const std::filesystem::path& path, const MlpModel& model,
                const nlohmann::json& extra = nlohmann::json::object());
MlpModel load_model(const std::filesystem::path& path);

}  // namespace morphouq
