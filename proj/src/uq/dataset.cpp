#include "morphouq/uq/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "morphouq/errors.hpp"
#include "morphouq/io/container.hpp"
#include "morphouq/rng.hpp"

namespace morphouq {

std::size_t McDataset::ok_count() const {
  return static_cast<std::size_t>(std::count(status.begin(), status.end(), std::uint8_t{1}));
}

std::vector<std::size_t> FieldWindow::cells(const Grid& grid) const {
  std::vector<std::size_t> out;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      const double x = grid.xc(i);
      const double y = grid.yc(j);
      if (grid.active[k] && x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi) out.push_back(k);
    }
  }
  return out;
}

namespace {

std::filesystem::path row_path(const std::filesystem::path& dir, std::size_t i) {
  char name[32];
  std::snprintf(name, sizeof name, "row_%07zu.sim", i);
  return dir / name;
}

bool reusable(const SimulationResult& r, const MorphoParams& p, const std::string& grid_hash,
              const std::string& cfg_hash) {
  return r.grid_hash == grid_hash && r.config_hash == cfg_hash && r.params.to_array() == p.to_array();
}

}  // namespace

McDataset run_batch(const PriorSpec& prior, const std::vector<double>& design, const Grid& grid,
                    const RunConfig& config, const BatchOptions& options) {
  prior.validate();
  const std::size_t d = prior.dim();
  if (design.size() % d != 0) throw SizingError("design size is not a multiple of the prior dimension");
  McDataset ds;
  ds.prior = prior;
  ds.rows = design.size() / d;
  ds.design = design;
  ds.field_cells = options.window.cells(grid);
  if (ds.field_cells.empty()) throw ConfigError("field window contains no active cell");
  for (std::size_t k : ds.field_cells) {
    const int i = static_cast<int>(k % static_cast<std::size_t>(grid.nx));
    const int j = static_cast<int>(k / static_cast<std::size_t>(grid.nx));
    ds.field_x.push_back(grid.xc(i));
    ds.field_y.push_back(grid.yc(j));
    ds.field_initial.push_back(grid.z_fixed[k] + grid.erodible0[k]);
  }
  for (const Probe& p : config.probes) ds.probe_names.push_back(p.name);
  const std::size_t n_out = config.time.output_count();
  ds.times.resize(n_out);
  for (std::size_t i = 0; i < n_out; ++i) ds.times[i] = static_cast<double>(i) * config.time.output_interval;
  ds.times.back() = config.time.t_end;
  ds.provenance = {options.design_seed, grid.hash(), config_hash(config)};
  ds.config = config_to_json(config);

  const std::size_t m = ds.field_size();
  const std::size_t pm = ds.probe_size();
  ds.outputs_field.assign(ds.rows * m, std::nan(""));
  ds.outputs_probe.assign(ds.rows * pm, std::nan(""));
  ds.outputs_depth.assign(ds.rows * pm, std::nan(""));
  ds.status.assign(ds.rows, 0);
  ds.failures.assign(ds.rows, "");
  if (!options.row_dir.empty()) std::filesystem::create_directories(options.row_dir);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= ds.rows) return;
      try {
        const MorphoParams p = params_from_values(
            prior.layout, std::span<const double>(design.data() + i * d, d), config.params);
        SimulationResult r;
        bool have = false;
        if (!options.row_dir.empty()) {
          const auto path = row_path(options.row_dir, i);
          if (std::filesystem::exists(path)) {
            try {
              r = read_simulation(path);
              have = reusable(r, p, ds.provenance.grid_hash, ds.provenance.config_hash);
            } catch (const FormatError&) {
              have = false;
            }
          }
        }
        if (!have) {
          r = run_simulation(grid, config, p);
          if (!options.row_dir.empty()) write_simulation(row_path(options.row_dir, i), r);
        }
        ds.status[i] = r.ok ? 1 : 0;
        ds.failures[i] = r.failure;
        if (r.ok) {
          for (std::size_t c = 0; c < m; ++c) ds.outputs_field[i * m + c] = r.zb_final[ds.field_cells[c]];
          std::copy(r.probe_eta.begin(), r.probe_eta.end(), ds.outputs_probe.begin() + i * pm);
          std::copy(r.probe_depth.begin(), r.probe_depth.end(), ds.outputs_depth.begin() + i * pm);
        }
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(ds.rows);
        return;
      }
      const std::size_t finished = done.fetch_add(1) + 1;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(finished, ds.rows);
      }
    }
  };

  const unsigned jobs = std::max(1u, std::min<unsigned>(options.jobs, static_cast<unsigned>(std::max<std::size_t>(ds.rows, 1))));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return ds;
}

Split split_dataset(const McDataset& ds, double val_frac, double test_frac, std::uint64_t seed) {
  if (!(val_frac > 0.0) || !(test_frac > 0.0)) throw SizingError("split fractions must be positive");
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < ds.rows; ++i) {
    if (ds.status[i]) ok.push_back(i);
  }
  const double total = 1.0 + val_frac + test_frac;
  const auto n = static_cast<double>(ok.size());
  const auto n_val = static_cast<std::size_t>(std::floor(val_frac * n / total + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(test_frac * n / total + 1e-9));
  if (n_val < 1 || n_test < 1 || n_val + n_test >= ok.size()) {
    throw SizingError("split needs more successful rows (have " + std::to_string(ok.size()) + ")");
  }
  Rng rng = make_rng(seed, 0x53504c4954ULL);
  for (std::size_t i = ok.size(); i > 1; --i) {
    std::swap(ok[i - 1], ok[uniform_index(rng, i)]);
  }
  Split s;
  s.val.assign(ok.begin(), ok.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.test.assign(ok.begin() + static_cast<std::ptrdiff_t>(n_val),
                ok.begin() + static_cast<std::ptrdiff_t>(n_val + n_test));
  s.train.assign(ok.begin() + static_cast<std::ptrdiff_t>(n_val + n_test), ok.end());
  return s;
}

void save_dataset(const std::filesystem::path& path, const McDataset& ds) {
  io::Container c;
  c.kind = "mc_dataset";
  std::vector<int> status(ds.status.begin(), ds.status.end());
  c.meta = {{"prior", ds.prior.to_json()},
            {"rows", ds.rows},
            {"field_cells", ds.field_cells},
            {"probe_names", ds.probe_names},
            {"times", ds.times.size()},
            {"status", status},
            {"failures", ds.failures},
            {"provenance",
             {{"seed", ds.provenance.seed},
              {"grid_hash", ds.provenance.grid_hash},
              {"config_hash", ds.provenance.config_hash}}},
            {"config", ds.config}};
  for (const auto* v : {&ds.design, &ds.field_x, &ds.field_y, &ds.field_initial, &ds.times,
                        &ds.outputs_field, &ds.outputs_probe, &ds.outputs_depth}) {
    c.payload.insert(c.payload.end(), v->begin(), v->end());
  }
  io::write_container(path, c);
}

McDataset load_dataset(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, "mc_dataset");
  McDataset ds;
  try {
    const auto& m = c.meta;
    ds.prior = PriorSpec::from_json(m.at("prior"));
    ds.rows = m.at("rows").get<std::size_t>();
    ds.field_cells = m.at("field_cells").get<std::vector<std::size_t>>();
    ds.probe_names = m.at("probe_names").get<std::vector<std::string>>();
    const auto nt = m.at("times").get<std::size_t>();
    for (int s : m.at("status").get<std::vector<int>>()) ds.status.push_back(static_cast<std::uint8_t>(s));
    ds.failures = m.at("failures").get<std::vector<std::string>>();
    const auto& pv = m.at("provenance");
    ds.provenance.seed = pv.at("seed").get<std::uint64_t>();
    ds.provenance.grid_hash = pv.at("grid_hash").get<std::string>();
    ds.provenance.config_hash = pv.at("config_hash").get<std::string>();
    ds.config = m.at("config");
    if (ds.status.size() != ds.rows || ds.failures.size() != ds.rows) {
      throw FormatError(path.string() + ": status list does not match row count");
    }
    io::PayloadReader in(c.payload);
    const std::size_t mf = ds.field_cells.size();
    ds.design = in.take(ds.rows * ds.prior.dim());
    ds.field_x = in.take(mf);
    ds.field_y = in.take(mf);
    ds.field_initial = in.take(mf);
    ds.times = in.take(nt);
    ds.outputs_field = in.take(ds.rows * mf);
    ds.outputs_probe = in.take(ds.rows * ds.probe_names.size() * nt);
    ds.outputs_depth = in.take(ds.rows * ds.probe_names.size() * nt);
    if (!in.exhausted()) throw FormatError(path.string() + ": trailing payload");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed dataset metadata (" + e.what() + ")");
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return ds;
}

std::vector<std::string> provenance_warnings(const McDataset& ds, const Grid& grid,
                                             const RunConfig& config) {
  std::vector<std::string> w;
  const std::string gh = grid.hash();
  if (ds.provenance.grid_hash != gh) {
    w.push_back("dataset grid hash " + ds.provenance.grid_hash + " differs from current grid " + gh);
  }
  const std::string ch = config_hash(config);
  if (ds.provenance.config_hash != ch) {
    w.push_back("dataset config hash " + ds.provenance.config_hash +
                " differs from current config " + ch);
  }
  return w;
}

void export_dataset_csv(const std::filesystem::path& dir, const McDataset& ds) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw FormatError("cannot write " + (dir / name).string());
    out.precision(10);
    return out;
  };
  {
    auto out = open("design.csv");
    out << "row";
    for (Param p : ds.prior.layout) out << ',' << param_name(p);
    out << ",status\n";
    for (std::size_t i = 0; i < ds.rows; ++i) {
      out << i;
      for (std::size_t c = 0; c < ds.dim(); ++c) out << ',' << ds.design_row(i)[c];
      out << ',' << int(ds.status[i]) << '\n';
    }
  }
  {
    auto out = open("field.csv");
    out << "row";
    for (std::size_t c = 0; c < ds.field_size(); ++c) out << ",z_" << c;
    out << '\n';
    out << "x";
    for (double x : ds.field_x) out << ',' << x;
    out << "\ny";
    for (double y : ds.field_y) out << ',' << y;
    out << '\n';
    for (std::size_t i = 0; i < ds.rows; ++i) {
      out << i;
      for (std::size_t c = 0; c < ds.field_size(); ++c) out << ',' << ds.field_row(i)[c];
      out << '\n';
    }
  }
  {
    auto out = open("probes.csv");
    out << "row,probe,t,eta,depth\n";
    const std::size_t nt = ds.times.size();
    for (std::size_t i = 0; i < ds.rows; ++i) {
      for (std::size_t p = 0; p < ds.probe_names.size(); ++p) {
        for (std::size_t t = 0; t < nt; ++t) {
          out << i << ',' << ds.probe_names[p] << ',' << ds.times[t] << ','
              << ds.probe_row(i)[p * nt + t] << ',' << ds.depth_row(i)[p * nt + t] << '\n';
        }
      }
    }
  }
}

}  // namespace morphouq
