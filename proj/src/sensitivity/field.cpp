#include "morphouq/sensitivity/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "morphouq/errors.hpp"
#include "morphouq/parallel.hpp"
#include "morphouq/rng.hpp"

namespace morphouq {

namespace {

struct Location {
  std::size_t column = 0;  // column inside the per-row output block
  bool probe = false;
};

std::ofstream open_csv(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(10);
  return out;
}

}  // namespace

SensitivityMap field_sensitivity(const McDataset& ds, SensitivityTarget target,
                                 const FieldSensitivityOptions& options) {
  if (options.time_stride == 0) throw SizingError("time stride must be positive");
  const std::size_t d = ds.dim();
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < ds.rows; ++i) {
    if (ds.status[i] != 0) ok.push_back(i);
  }
  if (ok.size() < 50 * options.delta.partitions) {
    throw SizingError("dataset has " + std::to_string(ok.size()) + " successful rows; " +
                      std::to_string(50 * options.delta.partitions) + " needed for " +
                      std::to_string(options.delta.partitions) + " partitions");
  }
  std::vector<double> inputs(ok.size() * d);
  for (std::size_t r = 0; r < ok.size(); ++r) {
    std::copy_n(ds.design_row(ok[r]), d, inputs.begin() + static_cast<std::ptrdiff_t>(r * d));
  }
  const InputMatrix x{inputs.data(), ok.size(), d};

  SensitivityMap map;
  map.target = target;
  map.rows_used = ok.size();
  for (Param p : ds.prior.layout) map.inputs.emplace_back(param_name(p));

  std::vector<std::size_t> columns;
  if (target == SensitivityTarget::Field) {
    if (ds.field_size() == 0) throw SizingError("dataset stores no bed field");
    for (std::size_t c = 0; c < ds.field_size(); ++c) {
      columns.push_back(c);
      map.x.push_back(ds.field_x[c]);
      map.y.push_back(ds.field_y[c]);
    }
  } else {
    if (ds.probe_size() == 0) throw SizingError("dataset stores no probe series");
    const std::size_t nt = ds.times.size();
    for (std::size_t p = 0; p < ds.probe_names.size(); ++p) {
      for (std::size_t t = 0; t < nt; t += options.time_stride) {
        columns.push_back(p * nt + t);
        map.probe.push_back(ds.probe_names[p]);
        map.t.push_back(ds.times[t]);
      }
    }
  }
  const std::size_t n_loc = columns.size();
  map.delta.assign(n_loc * d, 0.0);
  map.lower.assign(n_loc * d, 0.0);
  map.upper.assign(n_loc * d, 0.0);
  map.degenerate.assign(n_loc, 0);
  map.undefined.assign(n_loc, 0);

  const bool probe = target == SensitivityTarget::Probe;
  parallel_for(n_loc, options.jobs, [&](std::size_t loc) {
    const std::size_t col = columns[loc];
    std::vector<double> y(ok.size());
    bool wet = !probe;
    for (std::size_t r = 0; r < ok.size(); ++r) {
      if (probe) {
        y[r] = ds.probe_row(ok[r])[col];
        wet = wet || ds.depth_row(ok[r])[col] > options.h_dry;
      } else {
        y[r] = ds.field_row(ok[r])[col];
      }
    }
    double* dl = map.delta.data() + loc * d;
    double* lo = map.lower.data() + loc * d;
    double* hi = map.upper.data() + loc * d;
    if (!wet) {
      map.undefined[loc] = 1;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      std::fill_n(dl, d, nan);
      std::fill_n(lo, d, nan);
      std::fill_n(hi, d, nan);
      return;
    }
    if (options.reps > 0) {
      const DeltaEstimate e = bootstrap_ci(x, y, options.delta, options.reps, options.level,
                                           splitmix64(options.seed ^ splitmix64(loc)));
      map.degenerate[loc] = e.degenerate ? 1 : 0;
      std::copy(e.delta.begin(), e.delta.end(), dl);
      std::copy(e.lower.begin(), e.lower.end(), lo);
      std::copy(e.upper.begin(), e.upper.end(), hi);
    } else {
      const DeltaResult e = borgonovo_delta(x, y, options.delta);
      map.degenerate[loc] = e.degenerate ? 1 : 0;
      std::copy(e.delta.begin(), e.delta.end(), dl);
      std::copy(e.delta.begin(), e.delta.end(), lo);
      std::copy(e.delta.begin(), e.delta.end(), hi);
    }
  });
  return map;
}

std::vector<ScreeningEntry> screen(const SensitivityMap& map, double threshold) {
  std::vector<ScreeningEntry> out;
  const std::size_t d = map.inputs.size();
  for (std::size_t c = 0; c < d; ++c) {
    std::vector<double> v;
    for (std::size_t loc = 0; loc < map.size(); ++loc) {
      if (map.degenerate[loc] == 0 && map.undefined[loc] == 0) v.push_back(map.at(loc, c));
    }
    ScreeningEntry e;
    e.input = map.inputs[c];
    if (!v.empty()) {
      std::sort(v.begin(), v.end());
      const std::size_t m = v.size() / 2;
      e.median = v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    }
    e.negligible = e.median < threshold;
    out.push_back(e);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScreeningEntry& a, const ScreeningEntry& b) { return a.median > b.median; });
  return out;
}

void write_sensitivity_csv(const std::filesystem::path& path, const SensitivityMap& map) {
  std::ofstream out = open_csv(path);
  const bool field = map.target == SensitivityTarget::Field;
  out << (field ? "x,y" : "probe,t");
  for (const auto& n : map.inputs) out << ",delta_" << n << ",lower_" << n << ",upper_" << n;
  out << ",degenerate,undefined\n";
  const std::size_t d = map.inputs.size();
  for (std::size_t loc = 0; loc < map.size(); ++loc) {
    if (field) {
      out << map.x[loc] << ',' << map.y[loc];
    } else {
      out << map.probe[loc] << ',' << map.t[loc];
    }
    for (std::size_t c = 0; c < d; ++c) {
      const std::size_t k = loc * d + c;
      out << ',' << map.delta[k] << ',' << map.lower[k] << ',' << map.upper[k];
    }
    out << ',' << int(map.degenerate[loc]) << ',' << int(map.undefined[loc]) << '\n';
  }
}

void write_screening_csv(const std::filesystem::path& path,
                         const std::vector<ScreeningEntry>& ranking, double threshold) {
  std::ofstream out = open_csv(path);
  out << "rank,input,median_delta,threshold,negligible\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    out << i + 1 << ',' << ranking[i].input << ',' << ranking[i].median << ',' << threshold << ','
        << (ranking[i].negligible ? 1 : 0) << '\n';
  }
}

}  // namespace morphouq
