// morphouq command line: forward runs, Monte Carlo databases, sensitivity
// maps, emulator training, Bayesian inference and plot-data bundles.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "morphouq/bayes/diagnostics.hpp"
#include "morphouq/bayes/posterior.hpp"
#include "morphouq/domain/config.hpp"
#include "morphouq/emulator/mlp.hpp"
#include "morphouq/errors.hpp"
#include "morphouq/model/simulation.hpp"
#include "morphouq/pipeline/manifest.hpp"
#include "morphouq/pipeline/workflow.hpp"
#include "morphouq/sensitivity/field.hpp"
#include "morphouq/simd/kernels.hpp"
#include "morphouq/uq/dataset.hpp"

namespace fs = std::filesystem;
using namespace morphouq;

namespace {

enum Exit { kOk = 0, kUsage = 2, kSchema = 3, kSolver = 4, kTraining = 5, kInference = 6, kIo = 7 };

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  std::string out = ".";
  std::string simd = "auto";
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw UsageError("not a number: '" + s + "'");
  }
  if (used != s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::vector<double> number_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(to_double(item));
  return out;
}

std::pair<double, double> range_arg(const std::string& s, const std::string& flag) {
  const auto v = number_list(s);
  if (v.size() != 2 || !(v[0] <= v[1])) throw UsageError(flag + " expects lo,hi");
  return {v[0], v[1]};
}

std::map<std::string, std::string> key_values(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("expected key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::map<std::string, double> named_values(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& [k, v] : key_values(items)) out[k] = to_double(v);
  return out;
}

/// "a..b" gives a, 2a, 3a, ... below b, then b; "a..b:k" gives k evenly
/// spaced counts from a to b.
std::vector<std::size_t> count_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) throw UsageError("--counts expects a..b or a..b:k");
  const auto colon = s.find(':', dots);
  const double a = to_double(s.substr(0, dots));
  const double b = to_double(s.substr(dots + 2, colon == std::string::npos ? std::string::npos : colon - dots - 2));
  if (!(a >= 1.0) || !(b >= a) || a != std::floor(a) || b != std::floor(b)) {
    throw UsageError("--counts needs integers 1 <= a <= b");
  }
  const auto lo = static_cast<std::size_t>(a);
  const auto hi = static_cast<std::size_t>(b);
  std::vector<std::size_t> out;
  if (colon != std::string::npos) {
    const double k = to_double(s.substr(colon + 1));
    if (!(k >= 1.0) || k != std::floor(k)) throw UsageError("--counts step count must be a positive integer");
    const auto n = static_cast<std::size_t>(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double f = n == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      out.push_back(static_cast<std::size_t>(std::llround(static_cast<double>(lo) + f * static_cast<double>(hi - lo))));
    }
  } else {
    for (std::size_t c = lo; c < hi; c += lo) out.push_back(c);
    out.push_back(hi);
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RunConfig load_run_config(const Globals& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : load_config(g.config);
  validate(c);
  return c;
}

PriorSpec load_prior(const std::string& name) {
  if (name == "screening" || name == "reduced") return PriorSpec::preset(name);
  std::ifstream in(name);
  if (!in) throw ConfigError("prior: '" + name + "' is neither a preset nor a readable file");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(name + ": " + e.what());
  }
  PriorSpec p = PriorSpec::from_json(j);
  p.validate();
  return p;
}

fs::path out_dir(const Globals& g) {
  fs::create_directories(g.out);
  return g.out;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  return out;
}

void add_outputs(PipelineManifest& m, const fs::path& dir, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    if (fs::exists(dir / n)) m.outputs.push_back(artifact_ref(dir / n));
  }
}

void add_input(PipelineManifest& m, const std::string& path) {
  if (!path.empty()) m.inputs.push_back(artifact_ref(path));
}

void progress_line(const char* what, std::size_t done, std::size_t total) {
  if (total == 0) return;
  const std::size_t step = std::max<std::size_t>(1, total / 10);
  if (done % step == 0 || done == total) std::fprintf(stderr, "%s %zu/%zu\n", what, done, total);
}

// simulate ----------------------------------------------------------------

struct SimulateArgs {
  std::string params_file;
  std::vector<std::string> set;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  Stopwatch clock;
  RunConfig config = load_run_config(g);
  MorphoParams params = config.params;
  std::map<std::string, double> named;
  if (!a.params_file.empty()) {
    std::ifstream in(a.params_file);
    if (!in) throw FormatError("cannot read " + a.params_file);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(a.params_file + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(a.params_file + ": expected an object of parameter values");
    for (const auto& [k, v] : j.items()) {
      if (!v.is_number()) throw ConfigError(a.params_file + ": '" + k + "' must be a number");
      named[k] = v.get<double>();
    }
  }
  for (const auto& [k, v] : named_values(a.set)) named[k] = v;
  for (const auto& [k, v] : named) params[param_from_name(k)] = v;
  if (!params.within_support()) throw ConfigError("parameters outside their supports");
  config.params = params;

  const Grid grid = grid_for(config);
  const SimulationResult r = run_simulation(grid, config, params);
  const fs::path dir = out_dir(g);
  write_simulation(dir / "simulation.bin", r);
  write_probe_csv(dir / "probes.csv", r);
  write_bed_csv(dir / "bed.csv", grid, r);

  PipelineManifest m;
  m.stage = "simulate";
  add_input(m, g.config);
  add_input(m, a.params_file);
  add_outputs(m, dir, {"simulation.bin", "probes.csv", "bed.csv"});
  m.seed = g.seed;
  m.wall_seconds = clock.seconds();
  m.options = {{"params", nlohmann::json(params.to_array())}, {"ok", r.ok}};
  write_manifest(dir, m);

  if (!r.ok) {
    std::fprintf(stderr, "solver failure: %s\n", r.failure.c_str());
    return kSolver;
  }
  std::printf("simulated %.2f s on %dx%d cells in %.1f s; water error %.2e\n",
              r.times.empty() ? 0.0 : r.times.back(), r.nx, r.ny, r.wall_seconds,
              r.ledger.water_error());
  return kOk;
}

// mc ----------------------------------------------------------------------

struct McArgs {
  std::size_t n = 0;
  std::string prior = "screening";
  std::string window;
  bool csv = false;
};

int cmd_mc(const Globals& g, const McArgs& a) {
  Stopwatch clock;
  if (a.n == 0) throw UsageError("--n must be positive");
  const RunConfig config = load_run_config(g);
  const PriorSpec prior = load_prior(a.prior);
  const Grid grid = grid_for(config);
  BatchOptions opts;
  opts.jobs = g.jobs;
  opts.design_seed = g.seed;
  if (!a.window.empty()) {
    const auto w = number_list(a.window);
    if (w.size() != 2 && w.size() != 4) throw UsageError("--window expects x_lo,x_hi[,y_lo,y_hi]");
    opts.window.x_lo = w[0];
    opts.window.x_hi = w[1];
    if (w.size() == 4) {
      opts.window.y_lo = w[2];
      opts.window.y_hi = w[3];
    }
  }
  const fs::path dir = out_dir(g);
  opts.row_dir = dir / "rows";
  opts.progress = [](std::size_t done, std::size_t total) { progress_line("runs", done, total); };

  const std::vector<double> design = sample_prior(prior, a.n, g.seed);
  const McDataset ds = run_batch(prior, design, grid, config, opts);
  save_dataset(dir / "dataset.bin", ds);
  if (a.csv) export_dataset_csv(dir, ds);

  PipelineManifest m;
  m.stage = "mc";
  add_input(m, g.config);
  add_outputs(m, dir, {"dataset.bin", "design.csv", "field.csv", "probes.csv"});
  m.seed = g.seed;
  m.wall_seconds = clock.seconds();
  m.options = {{"n", a.n}, {"prior", prior.to_json()}, {"window", a.window}, {"ok_rows", ds.ok_count()}};
  write_manifest(dir, m);

  std::printf("%zu of %zu runs succeeded; %zu field cells stored\n", ds.ok_count(), ds.rows, ds.field_size());
  for (std::size_t i = 0; i < ds.rows; ++i) {
    if (ds.status[i] == 0) std::printf("row %zu failed: %s\n", i, ds.failures[i].c_str());
  }
  return kOk;
}

// sensitivity -------------------------------------------------------------

struct SensitivityArgs {
  std::string dataset;
  std::size_t partitions = 0;
  std::size_t bins = 100;
  std::size_t reps = 0;
  double level = 0.9;
  double threshold = 0.05;
  std::string sizes;
  std::size_t curve_reps = 100;
  std::size_t time_stride = 1;
  bool no_probes = false;
};

/// Design rows and one scalar output per successful run.
struct ScalarSample {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t rows = 0;
};

ScalarSample scalar_sample(const McDataset& ds, const std::function<double(std::size_t)>& output) {
  ScalarSample s;
  for (std::size_t i = 0; i < ds.rows; ++i) {
    if (ds.status[i] == 0) continue;
    s.x.insert(s.x.end(), ds.design_row(i), ds.design_row(i) + ds.dim());
    s.y.push_back(output(i));
    ++s.rows;
  }
  return s;
}

int cmd_sensitivity(const Globals& g, const SensitivityArgs& a) {
  Stopwatch clock;
  const McDataset ds = load_dataset(a.dataset);
  const std::size_t ok = ds.ok_count();
  FieldSensitivityOptions opts;
  opts.delta.partitions = a.partitions != 0 ? a.partitions : std::clamp<std::size_t>(ok / 50, 1, 32);
  opts.delta.bins = a.bins;
  opts.reps = a.reps;
  opts.level = a.level;
  opts.seed = g.seed;
  opts.jobs = g.jobs;
  opts.time_stride = a.time_stride;
  std::printf("%zu successful runs, %zu partitions, %zu bins\n", ok, opts.delta.partitions, opts.delta.bins);

  const fs::path dir = out_dir(g);
  const SensitivityMap field = field_sensitivity(ds, SensitivityTarget::Field, opts);
  write_sensitivity_csv(dir / "sensitivity_field.csv", field);
  const auto ranking = screen(field, a.threshold);
  write_screening_csv(dir / "screening.csv", ranking, a.threshold);
  if (!a.no_probes && ds.probe_size() > 0) {
    const SensitivityMap probe = field_sensitivity(ds, SensitivityTarget::Probe, opts);
    write_sensitivity_csv(dir / "sensitivity_probe.csv", probe);
  }

  std::vector<std::string> outputs = {"sensitivity_field.csv", "screening.csv", "sensitivity_probe.csv"};
  if (!a.sizes.empty()) {
    std::vector<std::size_t> sizes;
    for (double s : number_list(a.sizes)) {
      if (!(s >= 1.0) || s != std::floor(s)) throw UsageError("--sizes expects positive integers");
      sizes.push_back(static_cast<std::size_t>(s));
    }
    const auto names = input_names(ds.prior);
    auto curve = [&](const ScalarSample& s, const std::string& file) {
      const InputMatrix x{s.x.data(), s.rows, ds.dim()};
      write_convergence_csv(dir / file, names,
                            convergence_curve(x, s.y, sizes, opts.delta, a.curve_reps, a.level, g.seed));
      outputs.push_back(file);
    };
    curve(scalar_sample(ds,
                        [&](std::size_t i) {
                          double acc = 0.0;
                          for (std::size_t c = 0; c < ds.field_size(); ++c) {
                            acc += std::abs(ds.field_row(i)[c] - ds.field_initial[c]);
                          }
                          return ds.field_size() ? acc / static_cast<double>(ds.field_size()) : 0.0;
                        }),
          "convergence_mean_dz.csv");
    const std::size_t nt = ds.times.size();
    for (std::size_t p = 0; p < ds.probe_names.size() && nt > 0; ++p) {
      curve(scalar_sample(ds, [&](std::size_t i) { return ds.probe_row(i)[p * nt + nt - 1]; }),
            "convergence_eta_" + ds.probe_names[p] + ".csv");
    }
  }

  PipelineManifest m;
  m.stage = "sensitivity";
  add_input(m, a.dataset);
  add_outputs(m, dir, outputs);
  m.seed = g.seed;
  m.wall_seconds = clock.seconds();
  m.options = {{"partitions", opts.delta.partitions}, {"bins", opts.delta.bins}, {"reps", a.reps},
               {"threshold", a.threshold}, {"sizes", a.sizes}, {"curve_reps", a.curve_reps}};
  write_manifest(dir, m);

  std::printf("rank input median_delta (threshold %.3f)\n", a.threshold);
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    std::printf("%zu %s %.4f%s\n", r + 1, ranking[r].input.c_str(), ranking[r].median,
                ranking[r].negligible ? " negligible" : "");
  }
  return kOk;
}

// train -------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string preset;
  std::string hidden;
  std::size_t epochs = 5000;
  std::size_t batch = 64;
  double lr = 1e-4;
  double val_frac = 0.2;
  double test_frac = 0.2;
  std::size_t search_trials = 0;
  bool printed_q2 = false;
  std::string x_range;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  Stopwatch clock;
  const McDataset ds = load_dataset(a.dataset);
  EmulatorOptions opts;
  opts.hyper.epochs = a.epochs;
  opts.hyper.batch = a.batch;
  opts.hyper.learning_rate = a.lr;
  opts.hyper.seed = g.seed;
  if (!a.preset.empty()) opts.hyper.hidden = topology_preset(a.preset);
  if (!a.hidden.empty()) {
    opts.hyper.hidden.clear();
    for (double w : number_list(a.hidden)) {
      if (!(w >= 1.0) || w != std::floor(w)) throw UsageError("--hidden expects positive integers");
      opts.hyper.hidden.push_back(static_cast<std::size_t>(w));
    }
  }
  opts.val_frac = a.val_frac;
  opts.test_frac = a.test_frac;
  opts.split_seed = g.seed;
  opts.printed_q2 = a.printed_q2;
  if (!a.x_range.empty()) std::tie(opts.x_lo, opts.x_hi) = range_arg(a.x_range, "--x-range");

  const fs::path dir = out_dir(g);
  std::vector<std::string> outputs = {"model.mlp", "train_report.json", "loss.csv", "q2.csv"};
  if (a.search_trials > 0) {
    const auto columns = field_columns(ds, opts.x_lo, opts.x_hi);
    const Split sp = split_dataset(ds, opts.val_frac, opts.test_frac, opts.split_seed);
    const TopologySearch search = topology_search(training_set(ds, sp.train, columns),
                                                  training_set(ds, sp.val, columns), opts.hyper,
                                                  a.search_trials, g.jobs);
    std::ofstream out = open_out(dir / "topology_search.csv");
    out << "trial,hidden,val_loss\n";
    for (std::size_t t = 0; t < search.trials.size(); ++t) {
      std::string h;
      for (std::size_t w : search.trials[t].hidden) h += (h.empty() ? "" : " ") + std::to_string(w);
      out << t << ',' << h << ',' << search.trials[t].val_loss << '\n';
    }
    opts.hyper.hidden = search.trials[search.best].hidden;
    outputs.push_back("topology_search.csv");
  }

  const std::size_t report_every = std::max<std::size_t>(1, opts.hyper.epochs / 20);
  const EmulatorBuild b = build_emulator(ds, opts, [&](std::size_t e, double tr, double va) {
    if ((e + 1) % report_every == 0) std::fprintf(stderr, "epoch %zu train %.3e val %.3e\n", e + 1, tr, va);
  });

  save_model(dir / "model.mlp", b.model,
             {{"hyper", opts.hyper.to_json()}, {"dataset", artifact_ref(a.dataset).hash},
              {"q2_median", b.q2.median()}});
  {
    std::ofstream out = open_out(dir / "train_report.json");
    nlohmann::json j = b.report.to_json();
    j["q2_median"] = b.q2.median();
    j["outputs"] = b.columns.size();
    j["train_rows"] = b.split.train.size();
    j["val_rows"] = b.split.val.size();
    j["test_rows"] = b.split.test.size();
    out << j.dump(2) << '\n';
  }
  {
    std::ofstream out = open_out(dir / "loss.csv");
    out << "epoch,train,val\n";
    for (std::size_t e = 0; e < b.report.train_loss.size(); ++e) {
      out << e + 1 << ',' << b.report.train_loss[e] << ',' << b.report.val_loss[e] << '\n';
    }
  }
  {
    std::ofstream out = open_out(dir / "q2.csv");
    out << "x,y,q2,undefined\n";
    for (std::size_t c = 0; c < b.q2.q2.size(); ++c) {
      out << b.model.output_x[c] << ',' << b.model.output_y[c] << ',' << b.q2.q2[c] << ','
          << int(b.q2.undefined[c]) << '\n';
    }
  }

  PipelineManifest m;
  m.stage = "train";
  add_input(m, a.dataset);
  add_outputs(m, dir, outputs);
  m.seed = g.seed;
  m.wall_seconds = clock.seconds();
  m.options = {{"hyper", opts.hyper.to_json()}, {"val_frac", a.val_frac}, {"test_frac", a.test_frac},
               {"x_range", a.x_range}, {"printed_q2", a.printed_q2}};
  write_manifest(dir, m);

  std::printf("best epoch %zu, validation mse %.3e, mae %.3e m, test Q2 median %.4f over %zu cells\n",
              b.report.best_epoch + 1, b.report.best_val_loss, b.report.mae, b.q2.median(),
              b.columns.size());
  return kOk;
}

// infer -------------------------------------------------------------------

struct InferArgs {
  std::string model;
  std::string prior = "reduced";
  std::string obs;
  double max_distance = 0.15;
  std::vector<std::string> twin;
  std::vector<std::string> truth;
  std::size_t chains = 4;
  std::size_t draws = 1000;
  std::size_t warmup = 0;
  std::size_t max_depth = 10;
  std::size_t init_draws = 100;
  double target_accept = 0.8;
  bool dense_metric = false;
  std::string obs_x_range = "12.78,20.0";
  double sigma_scale = 0.008;
  double profile_y = 4.25;
  double level = 0.95;
  std::size_t predictive_draws = 500;
  double rhat_threshold = 1.01;
  std::string counts;
  std::size_t reps = 3;
};

ObservationSet twin_set(const Globals& g, const InferArgs& a, const MlpModel& model,
                        const PriorSpec& prior, const std::vector<std::size_t>& cells) {
  const auto kv = key_values(a.twin);
  for (const auto& [k, v] : kv) {
    if (k != "noise" && k != "source" && k != "seed") throw UsageError("unknown --twin key '" + k + "'");
  }
  if (!kv.count("noise")) throw UsageError("--twin needs noise=<sd>");
  const double noise = to_double(kv.at("noise"));
  const std::string source = kv.count("source") ? kv.at("source") : "emulator";
  const std::uint64_t seed = kv.count("seed") ? std::stoull(kv.at("seed")) : g.seed;

  std::vector<double> truth;
  std::vector<double> field;
  if (source == "emulator") {
    std::map<std::string, double> named = reference_truth();
    for (const auto& [k, v] : named_values(a.truth)) named[k] = v;
    for (auto it = named.begin(); it != named.end();) {
      it = prior.column(param_from_name(it->first)) < 0 ? named.erase(it) : std::next(it);
    }
    truth = parameter_vector(prior, named);
    const LogPosterior lp(model, prior, {}, {});
    field = predict(model, lp.model_input(truth));
  } else {
    const SimulationResult r = read_simulation(source);
    if (!r.ok) throw SolverError("truth simulation failed: " + r.failure);
    const RunConfig config = load_run_config(g);
    const Grid grid = grid_for(config);
    if (r.grid_hash != grid.hash()) throw ConfigError("truth simulation was run on a different grid");
    field = solver_field(r, grid, model);
    for (Param p : prior.layout) truth.push_back(r.params[p]);
  }
  ObservationSet obs = twin_observations(field, cells, model.output_x, model.output_y, noise, seed);
  obs.truth = truth;
  return obs;
}

std::vector<std::size_t> profile_cells(const MlpModel& model, double y) {
  double best = 1e300;
  for (double cy : model.output_y) best = std::min(best, std::abs(cy - y));
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < model.output_y.size(); ++c) {
    if (std::abs(model.output_y[c] - y) <= best + 1e-9) cells.push_back(c);
  }
  std::sort(cells.begin(), cells.end(),
            [&](std::size_t l, std::size_t r) { return model.output_x[l] < model.output_x[r]; });
  return cells;
}

int cmd_infer(const Globals& g, const InferArgs& a) {
  Stopwatch clock;
  if (a.obs.empty() == a.twin.empty()) throw UsageError("give exactly one of --obs and --twin");
  const MlpModel model = load_model(a.model);
  if (model.output_x.size() != model.output_size()) {
    throw ModelError("model checkpoint has no output cell coordinates");
  }
  PriorSpec prior = load_prior(a.prior);
  prior.sigma_scale = a.sigma_scale;
  const auto [x_lo, x_hi] = range_arg(a.obs_x_range, "--obs-x-range");
  const std::vector<std::size_t> cells = cells_in_range(model.output_x, x_lo, x_hi);
  if (cells.empty()) throw SizingError("no emulator output cells inside --obs-x-range");

  ObservationSet obs;
  if (!a.obs.empty()) {
    ObservationSet all = read_observations_csv(a.obs, model.output_x, model.output_y, a.max_distance);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all.x[i] >= x_lo && all.x[i] <= x_hi) keep.push_back(i);
    }
    obs = all.subset(keep);
  } else {
    obs = twin_set(g, a, model, prior, cells);
  }
  if (obs.size() == 0) throw SizingError("no observations inside --obs-x-range");

  const SigmaPrior sigma{a.sigma_scale};
  const LogPosterior lp(model, prior, obs, sigma);
  McmcOptions mo;
  mo.chains = a.chains;
  mo.draws = a.draws;
  mo.warmup = a.warmup;
  mo.max_depth = a.max_depth;
  mo.init_draws = a.init_draws;
  mo.target_accept = a.target_accept;
  mo.dense_metric = a.dense_metric;
  mo.seed = g.seed;
  mo.jobs = g.jobs;

  const fs::path dir = out_dir(g);
  write_observations_csv(dir / "observations.csv", obs);
  const PosteriorSample s = run_mcmc(lp, mo);
  save_posterior(dir / "posterior.bin", s);
  const auto summary = summarize(s);
  write_summary_csv(dir / "summary.csv", summary);
  write_draws_csv(dir / "draws.csv", s);
  write_kde_csv(dir / "kde.csv", s);

  const auto profile = profile_cells(model, a.profile_y);
  const auto post_env = predictive_envelope(lp, posterior_rows(s, a.predictive_draws), profile, a.level, g.seed);
  const auto prior_env =
      predictive_envelope(lp, prior_rows(prior, sigma, a.predictive_draws, g.seed), profile, a.level, g.seed);
  write_envelope_csv(dir / "predictive.csv", post_env, &prior_env, model.output_x, model.output_y);

  std::vector<std::string> outputs = {"observations.csv", "posterior.bin", "summary.csv", "draws.csv",
                                      "kde.csv", "predictive.csv", "report.txt"};
  if (!a.counts.empty()) {
    std::vector<std::size_t> counts = count_range(a.counts);
    if (counts.back() > obs.size()) {
      throw SizingError("--counts exceeds the " + std::to_string(obs.size()) + " available observations");
    }
    const CountStudy study = obs_count_convergence(model, prior, obs, counts, a.reps, mo, sigma);
    write_count_study_csv(dir, study);
    outputs.push_back("obs_count_convergence.csv");
    outputs.push_back("obs_count_robustness.csv");
  }

  std::vector<std::string> warnings;
  for (const auto& p : summary) {
    if (p.rhat_undefined || !(p.rhat <= a.rhat_threshold)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "warning: split R-hat of %s is %.4f (threshold %.3f)", p.name.c_str(),
                    p.rhat, a.rhat_threshold);
      warnings.emplace_back(buf);
    }
  }
  {
    std::ofstream out = open_out(dir / "report.txt");
    out << "observations " << obs.size() << "\n";
    if (obs.noise) out << "twin noise " << *obs.noise << "\n";
    out << "chains " << s.chains << " draws " << s.draws << " warmup " << mo.resolved_warmup() << "\n";
    for (std::size_t c = 0; c < s.stats.size(); ++c) {
      const ChainStats& st = s.stats[c];
      out << "chain " << c << " step " << st.step_size << " accept " << st.mean_accept << " divergences "
          << st.divergences << " max_depth_hits " << st.max_depth_hits << "\n";
    }
    out << "param mean sd q025 q500 q975 rhat ess";
    if (obs.truth) out << " truth";
    out << "\n";
    for (std::size_t k = 0; k < summary.size(); ++k) {
      const auto& p = summary[k];
      out << p.name << ' ' << p.mean << ' ' << p.sd << ' ' << p.q025 << ' ' << p.q500 << ' ' << p.q975 << ' '
          << p.rhat << ' ' << p.ess;
      if (obs.truth) out << ' ' << (k < obs.truth->size() ? (*obs.truth)[k] : obs.noise.value_or(NAN));
      out << "\n";
    }
    for (const auto& w : warnings) out << w << "\n";
  }
  for (const auto& w : warnings) std::fprintf(stderr, "%s\n", w.c_str());

  PipelineManifest m;
  m.stage = "infer";
  add_input(m, a.model);
  add_input(m, a.obs);
  add_outputs(m, dir, outputs);
  m.seed = g.seed;
  m.wall_seconds = clock.seconds();
  m.options = {{"chains", a.chains}, {"draws", a.draws}, {"warmup", mo.resolved_warmup()},
               {"max_depth", a.max_depth}, {"init_draws", a.init_draws}, {"target_accept", a.target_accept},
               {"dense_metric", a.dense_metric}, {"obs_x_range", a.obs_x_range},
               {"sigma_scale", a.sigma_scale}, {"profile_y", a.profile_y}, {"twin", a.twin},
               {"truth", a.truth}, {"counts", a.counts}, {"reps", a.reps}};
  write_manifest(dir, m);

  std::printf("%-10s %12s %12s %12s %8s\n", "param", "mean", "q025", "q975", "rhat");
  for (const auto& p : summary) {
    std::printf("%-10s %12.6g %12.6g %12.6g %8.4f\n", p.name.c_str(), p.mean, p.q025, p.q975, p.rhat);
  }
  return kOk;
}

// report ------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> artifacts;
  std::size_t max_draws = 2000;
};

void write_pairs(const fs::path& bundle, const std::string& prefix, const PosteriorSample& s,
                 std::size_t max_draws) {
  const auto rows = posterior_rows(s, max_draws);
  {
    std::ofstream out = open_out(bundle / (prefix + "posterior_pairs.csv"));
    for (std::size_t k = 0; k < s.names.size(); ++k) out << (k ? "," : "") << s.names[k];
    out << '\n';
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) out << (k ? "," : "") << r[k];
      out << '\n';
    }
  }
  std::ofstream out = open_out(bundle / (prefix + "pearson.csv"));
  out << "param_a,param_b,r\n";
  const std::size_t d = s.dim;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const auto a = s.pooled(i);
      const auto b = s.pooled(j);
      const double n = static_cast<double>(a.size());
      double ma = 0.0;
      double mb = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) {
        ma += a[t];
        mb += b[t];
      }
      ma /= n;
      mb /= n;
      double sab = 0.0;
      double saa = 0.0;
      double sbb = 0.0;
      for (std::size_t t = 0; t < a.size(); ++t) {
        sab += (a[t] - ma) * (b[t] - mb);
        saa += (a[t] - ma) * (a[t] - ma);
        sbb += (b[t] - mb) * (b[t] - mb);
      }
      const double r = saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : NAN;
      out << s.names[i] << ',' << s.names[j] << ',' << r << '\n';
    }
  }
}

int cmd_report(const Globals& g, const ReportArgs& a) {
  Stopwatch clock;
  if (a.artifacts.empty()) throw UsageError("report needs at least one artifact directory");
  const fs::path bundle = out_dir(g) / "bundle";
  fs::create_directories(bundle);
  std::vector<std::string> missing;
  std::vector<std::string> warnings;
  std::ofstream index = open_out(bundle / "index.csv");
  index << "stage,file,source\n";
  PipelineManifest m;
  m.stage = "report";
  m.seed = g.seed;
  std::size_t found = 0;
  for (const auto& art : a.artifacts) {
    const fs::path src(art);
    if (!fs::is_directory(src)) {
      missing.push_back(art);
      continue;
    }
    ++found;
    std::string stage = src.filename().string();
    if (fs::exists(src / "manifest.json")) {
      const PipelineManifest am = read_manifest(src / "manifest.json");
      stage = am.stage;
      for (const auto& w : verify_manifest(am)) warnings.push_back(art + ": " + w);
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(src)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    const std::string prefix = stage + "_";
    for (const auto& f : files) {
      const fs::path dst = bundle / (prefix + f.filename().string());
      fs::copy_file(f, dst, fs::copy_options::overwrite_existing);
      index << stage << ',' << dst.filename().string() << ',' << f.string() << '\n';
      m.inputs.push_back(artifact_ref(f));
    }
    if (fs::exists(src / "posterior.bin")) {
      m.inputs.push_back(artifact_ref(src / "posterior.bin"));
      write_pairs(bundle, prefix, load_posterior(src / "posterior.bin"), a.max_draws);
      index << stage << ',' << prefix << "posterior_pairs.csv," << (src / "posterior.bin").string() << '\n';
      index << stage << ',' << prefix << "pearson.csv," << (src / "posterior.bin").string() << '\n';
    }
  }
  index.close();
  {
    std::ofstream out = open_out(bundle / "missing.txt");
    for (const auto& mi : missing) out << mi << '\n';
  }
  for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  for (const auto& mi : missing) std::fprintf(stderr, "missing artifact: %s\n", mi.c_str());
  for (const auto& e : fs::directory_iterator(bundle)) m.outputs.push_back(artifact_ref(e.path()));
  std::sort(m.outputs.begin(), m.outputs.end(),
            [](const ArtifactRef& l, const ArtifactRef& r) { return l.path < r.path; });
  m.wall_seconds = clock.seconds();
  m.options = {{"artifacts", a.artifacts}, {"missing", missing}};
  write_manifest(out_dir(g), m);
  std::printf("bundled %zu of %zu artifacts into %s\n", found, a.artifacts.size(), bundle.string().c_str());
  return found == 0 ? kIo : kOk;
}

template <class Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kUsage;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kSchema;
  } catch (const SizingError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kSchema;
  } catch (const DomainError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kSchema;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return kSolver;
  } catch (const TrainingError& e) {
    std::fprintf(stderr, "training error: %s\n", e.what());
    return kTraining;
  } catch (const ModelError& e) {
    std::fprintf(stderr, "model error: %s\n", e.what());
    return kTraining;
  } catch (const InferenceError& e) {
    std::fprintf(stderr, "inference error: %s\n", e.what());
    return kInference;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morphodynamic uncertainty quantification pipeline"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Run configuration JSON")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--simd", g.simd, "Kernel set: auto, scalar or avx2")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  app.fallthrough();

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Single forward run");
  c_sim->add_option("--params", sim.params_file, "JSON object of parameter values");
  c_sim->add_option("--set", sim.set, "Parameter override name=value")->take_all();

  McArgs mc;
  auto* c_mc = app.add_subcommand("mc", "Monte Carlo database over a prior");
  c_mc->add_option("--n", mc.n, "Number of runs")->required();
  c_mc->add_option("--prior", mc.prior, "screening, reduced or a prior JSON file");
  c_mc->add_option("--window", mc.window, "Stored field window x_lo,x_hi[,y_lo,y_hi]");
  c_mc->add_flag("--csv", mc.csv, "Also export design, field and probe CSV");

  SensitivityArgs sa;
  auto* c_sa = app.add_subcommand("sensitivity", "Borgonovo indices, screening and convergence");
  c_sa->add_option("--dataset", sa.dataset, "Monte Carlo dataset")->required()->check(CLI::ExistingFile);
  c_sa->add_option("--partitions", sa.partitions, "Input partitions (0 picks from the row count)");
  c_sa->add_option("--bins", sa.bins, "Output histogram bins");
  c_sa->add_option("--reps", sa.reps, "Bootstrap replicates per location");
  c_sa->add_option("--level", sa.level, "Bootstrap interval level");
  c_sa->add_option("--threshold", sa.threshold, "Screening threshold");
  c_sa->add_option("--sizes", sa.sizes, "Sample sizes of the convergence curves, comma separated");
  c_sa->add_option("--curve-reps", sa.curve_reps, "Bootstrap replicates per convergence point");
  c_sa->add_option("--time-stride", sa.time_stride, "Probe output instants between evaluations")
      ->check(CLI::PositiveNumber);
  c_sa->add_flag("--no-probes", sa.no_probes, "Skip the probe time series");

  TrainArgs ta;
  auto* c_tr = app.add_subcommand("train", "Fit the neural-network emulator");
  c_tr->add_option("--dataset", ta.dataset, "Monte Carlo dataset")->required()->check(CLI::ExistingFile);
  c_tr->add_option("--preset", ta.preset, "Hidden topology preset")->check(CLI::IsMember({"paper5"}));
  c_tr->add_option("--hidden", ta.hidden, "Hidden widths, comma separated");
  c_tr->add_option("--epochs", ta.epochs, "Training epochs")->check(CLI::PositiveNumber);
  c_tr->add_option("--batch", ta.batch, "Mini-batch size")->check(CLI::PositiveNumber);
  c_tr->add_option("--lr", ta.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  c_tr->add_option("--val-frac", ta.val_frac, "Validation rows as a fraction of training rows");
  c_tr->add_option("--test-frac", ta.test_frac, "Test rows as a fraction of training rows");
  c_tr->add_option("--search-trials", ta.search_trials, "Random topology search trials");
  c_tr->add_flag("--printed-q2", ta.printed_q2, "Q2 with emulator deviations in the denominator");
  c_tr->add_option("--x-range", ta.x_range, "Output cells with x in lo,hi");

  InferArgs ia;
  auto* c_in = app.add_subcommand("infer", "Posterior sampling against observations");
  c_in->add_option("--model", ia.model, "Emulator checkpoint")->required();
  c_in->add_option("--prior", ia.prior, "screening, reduced or a prior JSON file");
  c_in->add_option("--obs", ia.obs, "Observation CSV x,y,z_obs");
  c_in->add_option("--max-distance", ia.max_distance, "Largest observation to cell distance, m");
  c_in->add_option("--twin", ia.twin, "Twin experiment noise=<sd>[,source=emulator|<simulation file>][,seed=<n>]")
      ->delimiter(',');
  c_in->add_option("--truth", ia.truth, "Twin generating parameters name=value")->delimiter(',');
  c_in->add_option("--chains", ia.chains, "Chains")->check(CLI::PositiveNumber);
  c_in->add_option("--draws", ia.draws, "Draws per chain after warm-up")->check(CLI::PositiveNumber);
  c_in->add_option("--warmup", ia.warmup, "Warm-up iterations per chain (0 = 20% of draws)");
  c_in->add_option("--max-depth", ia.max_depth, "NUTS tree depth limit");
  c_in->add_option("--init-draws", ia.init_draws, "Prior draws screened for each chain start")->check(CLI::PositiveNumber);
  c_in->add_option("--target-accept", ia.target_accept, "Step-size adaptation target");
  c_in->add_flag("--dense-metric", ia.dense_metric, "Adapt a dense mass matrix");
  c_in->add_option("--obs-x-range", ia.obs_x_range, "Observation window lo,hi in x");
  c_in->add_option("--sigma-scale", ia.sigma_scale, "Half-normal scale of the noise prior")
      ->check(CLI::PositiveNumber);
  c_in->add_option("--profile-y", ia.profile_y, "y of the predictive profile, m");
  c_in->add_option("--level", ia.level, "Predictive band mass");
  c_in->add_option("--predictive-draws", ia.predictive_draws, "Parameter draws for predictive bands");
  c_in->add_option("--rhat-threshold", ia.rhat_threshold, "Split R-hat warning threshold");
  c_in->add_option("--counts", ia.counts, "Observation-count sweep a..b or a..b:k");
  c_in->add_option("--reps", ia.reps, "Random subsets per count")->check(CLI::PositiveNumber);

  ReportArgs ra;
  auto* c_rep = app.add_subcommand("report", "Collect plot data from stage directories");
  c_rep->add_option("artifacts", ra.artifacts, "Stage output directories")->required();
  c_rep->add_option("--max-draws", ra.max_draws, "Posterior draws in the pair scatter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (g.simd != "auto") {
    const simd::Isa want = g.simd == "avx2" ? simd::Isa::Avx2 : simd::Isa::Scalar;
    if (simd::set_active_isa(want) != want) std::fprintf(stderr, "warning: %s kernels unavailable\n", g.simd.c_str());
  }

  return guarded([&] {
    if (c_sim->parsed()) return cmd_simulate(g, sim);
    if (c_mc->parsed()) return cmd_mc(g, mc);
    if (c_sa->parsed()) return cmd_sensitivity(g, sa);
    if (c_tr->parsed()) return cmd_train(g, ta);
    if (c_in->parsed()) return cmd_infer(g, ia);
    return cmd_report(g, ra);
  });
}
