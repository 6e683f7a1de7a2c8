#include "morphouq/sensitivity/borgonovo.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "morphouq/errors.hpp"
#include "morphouq/rng.hpp"

namespace morphouq {

namespace {

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

double delta_core(const InputMatrix& x, std::span<const double> y, std::size_t input,
                  std::size_t partitions, std::size_t bins, std::vector<std::size_t> rows,
                  double ymin, double ymax) {
  const std::size_t n = rows.size();
  if (n == 0 || !(ymax > ymin)) return 0.0;
  const double scale = static_cast<double>(bins) / (ymax - ymin);
  auto bin_of = [&](double v) {
    const double b = std::floor((v - ymin) * scale);
    if (b < 0.0) return std::size_t{0};
    return std::min(bins - 1, static_cast<std::size_t>(b));
  };
  std::vector<double> marginal(bins, 0.0);
  for (std::size_t r : rows) marginal[bin_of(y[r])] += 1.0;
  const double dn = static_cast<double>(n);
  for (double& m : marginal) m /= dn;

  // Mean of the ascending and descending class splits; class terms are
  // summed in sorted order.
  std::vector<double> counts(bins);
  auto classes = [&](bool descending) {
    std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
      const double xa = x.at(a, input);
      const double xb = x.at(b, input);
      if (xa != xb) return descending ? xa > xb : xa < xb;
      return y[a] < y[b];
    });
    std::vector<double> terms;
    terms.reserve(partitions);
    for (std::size_t c = 0; c < partitions; ++c) {
      const std::size_t lo = c * n / partitions;
      const std::size_t hi = (c + 1) * n / partitions;
      if (hi <= lo) continue;
      std::fill(counts.begin(), counts.end(), 0.0);
      for (std::size_t r = lo; r < hi; ++r) counts[bin_of(y[rows[r]])] += 1.0;
      const double nc = static_cast<double>(hi - lo);
      double l1 = 0.0;
      for (std::size_t b = 0; b < bins; ++b) l1 += std::abs(counts[b] / nc - marginal[b]);
      terms.push_back(nc / dn * l1);
    }
    std::sort(terms.begin(), terms.end());
    double total = 0.0;
    for (double t : terms) total += t;
    return total;
  };
  const double up = classes(false);
  const double down = classes(true);
  return 0.25 * (up + down);
}

// Pseudo-random quarter (0..3) derived from the output value, so the split
// does not depend on row order. Quarters {0,2} and {1,3} form the halves.
unsigned quarter_of(double v) {
  return static_cast<unsigned>(splitmix64(std::bit_cast<std::uint64_t>(v + 0.0)) & 3U);
}

void check_size(std::size_t n, std::size_t partitions) {
  if (partitions == 0) throw SizingError("partition count must be positive");
  if (n < 50 * partitions) {
    throw SizingError("Borgonovo estimator needs at least 50 rows per partition (" +
                      std::to_string(n) + " rows, " + std::to_string(partitions) + " partitions)");
  }
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

DeltaResult delta_rows(const InputMatrix& x, std::span<const double> y,
                       const std::vector<std::size_t>& rows, const DeltaOptions& o) {
  DeltaResult out;
  out.delta.assign(x.cols, 0.0);
  double ymin = y[rows.front()];
  double ymax = ymin;
  for (std::size_t r : rows) {
    ymin = std::min(ymin, y[r]);
    ymax = std::max(ymax, y[r]);
  }
  if (!(ymax > ymin)) {
    out.degenerate = true;
    return out;
  }
  std::array<std::vector<std::size_t>, 4> quarters;
  if (o.bias_correction) {
    for (std::size_t r : rows) quarters[quarter_of(y[r])].push_back(r);
  }
  std::array<std::vector<std::size_t>, 2> halves;
  bool correct = o.bias_correction;
  for (unsigned q = 0; q < 4 && correct; ++q) {
    auto& h = halves[q & 1U];
    h.insert(h.end(), quarters[q].begin(), quarters[q].end());
    correct = quarters[q].size() >= o.partitions * 2;
  }
  // Mean of n^-1/2 over the subsamples of each level.
  const double af = 1.0 / std::sqrt(static_cast<double>(rows.size()));
  double ah = 0.0;
  double aq = 0.0;
  if (correct) {
    for (const auto& h : halves) ah += 0.5 / std::sqrt(static_cast<double>(h.size()));
    for (const auto& q : quarters) aq += 0.25 / std::sqrt(static_cast<double>(q.size()));
    correct = ah > af && aq > ah;
  }
  for (std::size_t c = 0; c < x.cols; ++c) {
    const double full = delta_core(x, y, c, o.partitions, o.bins, rows, ymin, ymax);
    double d = full;
    if (correct) {
      double dh = 0.0;
      double dq = 0.0;
      for (const auto& h : halves) dh += 0.5 * delta_core(x, y, c, o.partitions, o.bins, h, ymin, ymax);
      for (const auto& q : quarters) dq += 0.25 * delta_core(x, y, c, o.partitions, o.bins, q, ymin, ymax);
      // delta(n) = delta + k1 n^-1/2 + k2 n^-1 through full, half and quarter sizes.
      const double s1 = (dh - full) / (ah - af);
      const double s2 = (dq - dh) / (aq - ah);
      const double k2 = (s2 - s1) / (aq - af);
      const double k1 = s1 - k2 * (ah + af);
      d = full - k1 * af - k2 * af * af;
    }
    out.delta[c] = std::clamp(d, 0.0, 1.0);
  }
  return out;
}

}  // namespace

double delta_raw(const InputMatrix& x, std::span<const double> y, std::size_t input,
                 std::size_t partitions, std::size_t bins, std::span<const std::size_t> subset) {
  std::vector<std::size_t> rows =
      subset.empty() ? all_rows(x.rows) : std::vector<std::size_t>(subset.begin(), subset.end());
  if (rows.empty()) return 0.0;
  double ymin = y[rows.front()];
  double ymax = ymin;
  for (std::size_t r : rows) {
    ymin = std::min(ymin, y[r]);
    ymax = std::max(ymax, y[r]);
  }
  return delta_core(x, y, input, partitions, bins, std::move(rows), ymin, ymax);
}

DeltaResult borgonovo_delta(const InputMatrix& x, std::span<const double> y,
                            const DeltaOptions& options) {
  if (y.size() != x.rows) throw SizingError("input and output row counts differ");
  check_size(x.rows, options.partitions);
  if (options.bins == 0) throw SizingError("bin count must be positive");
  return delta_rows(x, y, all_rows(x.rows), options);
}

namespace {

DeltaEstimate bootstrap_rows(const InputMatrix& x, std::span<const double> y,
                             const std::vector<std::size_t>& rows, const DeltaOptions& options,
                             std::size_t reps, double level, std::uint64_t seed) {
  if (reps < 2) throw SizingError("bootstrap needs at least 2 replicates");
  if (!(level > 0.0 && level < 1.0)) throw SizingError("confidence level must lie in (0, 1)");
  check_size(rows.size(), options.partitions);
  DeltaEstimate est;
  est.level = level;
  est.sample_size = rows.size();
  est.partitions = options.partitions;
  const DeltaResult point = delta_rows(x, y, rows, options);
  est.delta = point.delta;
  est.degenerate = point.degenerate;
  est.lower = point.delta;
  est.upper = point.delta;
  if (point.degenerate) return est;

  std::vector<std::vector<double>> samples(x.cols, std::vector<double>(reps));
  std::vector<std::size_t> resample(rows.size());
  for (std::size_t r = 0; r < reps; ++r) {
    Rng rng = make_rng(seed, r);
    for (auto& idx : resample) idx = rows[uniform_index(rng, rows.size())];
    const DeltaResult d = delta_rows(x, y, resample, options);
    for (std::size_t c = 0; c < x.cols; ++c) samples[c][r] = d.delta[c];
  }
  const double a = 0.5 * (1.0 - level);
  for (std::size_t c = 0; c < x.cols; ++c) {
    std::sort(samples[c].begin(), samples[c].end());
    est.lower[c] = std::min(quantile_sorted(samples[c], a), est.delta[c]);
    est.upper[c] = std::max(quantile_sorted(samples[c], 1.0 - a), est.delta[c]);
  }
  return est;
}

}  // namespace

DeltaEstimate bootstrap_ci(const InputMatrix& x, std::span<const double> y,
                           const DeltaOptions& options, std::size_t reps, double level,
                           std::uint64_t seed) {
  if (y.size() != x.rows) throw SizingError("input and output row counts differ");
  return bootstrap_rows(x, y, all_rows(x.rows), options, reps, level, seed);
}

std::vector<DeltaEstimate> convergence_curve(const InputMatrix& x, std::span<const double> y,
                                             const std::vector<std::size_t>& sizes,
                                             const DeltaOptions& options, std::size_t reps,
                                             double level, std::uint64_t seed) {
  if (y.size() != x.rows) throw SizingError("input and output row counts differ");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] > x.rows) throw SizingError("convergence size exceeds the sample");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw SizingError("convergence sizes must ascend");
  }
  std::vector<std::size_t> order = all_rows(x.rows);
  Rng rng = make_rng(seed, 0x434f4e56ULL);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  std::vector<DeltaEstimate> out;
  for (std::size_t s : sizes) {
    std::vector<std::size_t> prefix(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
    out.push_back(bootstrap_rows(x, y, prefix, options, reps, level, seed + s));
  }
  return out;
}

void write_convergence_csv(const std::filesystem::path& path,
                           const std::vector<std::string>& input_names,
                           const std::vector<DeltaEstimate>& curve) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out.precision(8);
  out << "size,input,delta,lower,upper,level\n";
  for (const DeltaEstimate& e : curve) {
    for (std::size_t c = 0; c < e.delta.size(); ++c) {
      const std::string name = c < input_names.size() ? input_names[c] : "x" + std::to_string(c);
      out << e.sample_size << ',' << name << ',' << e.delta[c] << ',' << e.lower[c] << ','
          << e.upper[c] << ',' << e.level << '\n';
    }
  }
}

}  // namespace morphouq
