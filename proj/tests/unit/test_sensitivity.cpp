#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "morphouq/errors.hpp"
#include "morphouq/rng.hpp"
#include "morphouq/sensitivity/borgonovo.hpp"
#include "morphouq/sensitivity/field.hpp"

using namespace morphouq;

namespace {

struct Sample {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t rows = 0;
  std::size_t cols = 0;
  InputMatrix view() const { return {x.data(), rows, cols}; }
};

Sample uniform_sample(std::size_t n, std::size_t d, std::uint64_t seed,
                      const std::function<double(const double*)>& f) {
  Sample s;
  s.rows = n;
  s.cols = d;
  Rng rng = make_rng(seed);
  s.x.resize(n * d);
  for (double& v : s.x) v = uniform01(rng);
  s.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.y[i] = f(s.x.data() + i * d);
  return s;
}

// delta_1 for Y = Z1 + Z2 by midpoint quadrature of
// 0.5 E_{z1} int |f_Y(y) - f_{Y|z1}(y)| dy.
double sum_of_uniforms_oracle() {
  const int nz = 2000;
  const int ny = 4000;
  double total = 0.0;
  for (int a = 0; a < nz; ++a) {
    const double z1 = (a + 0.5) / nz;
    double inner = 0.0;
    for (int b = 0; b < ny; ++b) {
      const double y = 2.0 * (b + 0.5) / ny;
      const double fy = y < 1.0 ? y : 2.0 - y;
      const double fc = (y >= z1 && y <= z1 + 1.0) ? 1.0 : 0.0;
      inner += std::abs(fy - fc) * (2.0 / ny);
    }
    total += 0.5 * inner / nz;
  }
  return total;
}

}  // namespace

TEST_CASE("sum of uniforms against quadrature") {
  const double oracle = sum_of_uniforms_oracle();
  CHECK(oracle == doctest::Approx(1.0 / 3.0).epsilon(1e-3));
  const Sample s = uniform_sample(100000, 2, 1, [](const double* z) { return z[0] + z[1]; });
  const DeltaResult r = borgonovo_delta(s.view(), s.y);
  CHECK(std::abs(r.delta[0] - oracle) < 0.02);
  CHECK(std::abs(r.delta[1] - oracle) < 0.02);
}

TEST_CASE("dependence extremes") {
  const Sample ident = uniform_sample(10000, 1, 2, [](const double* z) { return z[0]; });
  CHECK(borgonovo_delta(ident.view(), ident.y).delta[0] > 0.9);

  const Sample noise = uniform_sample(10000, 2, 3, [](const double* z) { return z[0]; });
  const DeltaResult r = borgonovo_delta(noise.view(), noise.y);
  CHECK(r.delta[1] < 0.05);
  CHECK(r.delta[0] > 0.9);
}

TEST_CASE("monotone transforms of an input leave delta unchanged") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Sample s = uniform_sample(3200, 3, 10 + seed,
                              [](const double* z) { return std::sin(3.0 * z[0]) + z[1] * z[2]; });
    const DeltaResult base = borgonovo_delta(s.view(), s.y);
    Rng rng = make_rng(seed);
    const int kind = static_cast<int>(uniform_index(rng, 3));
    const std::size_t col = uniform_index(rng, 3);
    for (std::size_t i = 0; i < s.rows; ++i) {
      double& v = s.x[i * 3 + col];
      v = kind == 0 ? std::exp(5.0 * v) : kind == 1 ? -std::pow(v, 3.0) + 2.0 : std::atan(10.0 * v - 4.0);
    }
    const DeltaResult moved = borgonovo_delta(s.view(), s.y);
    CHECK(moved.delta == base.delta);
  }
}

TEST_CASE("row order does not matter") {
  Sample s = uniform_sample(3200, 2, 21, [](const double* z) { return z[0] * z[0] + 0.3 * z[1]; });
  const DeltaResult base = borgonovo_delta(s.view(), s.y);
  std::vector<std::size_t> perm(s.rows);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng = make_rng(4);
  for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
  Sample p = s;
  for (std::size_t i = 0; i < s.rows; ++i) {
    p.y[i] = s.y[perm[i]];
    p.x[i * 2] = s.x[perm[i] * 2];
    p.x[i * 2 + 1] = s.x[perm[i] * 2 + 1];
  }
  const DeltaResult moved = borgonovo_delta(p.view(), p.y);
  for (std::size_t k = 0; k < 2; ++k) CHECK(moved.delta[k] == doctest::Approx(base.delta[k]).epsilon(1e-12));
}

TEST_CASE("degenerate and undersized inputs") {
  const Sample c = uniform_sample(2000, 2, 5, [](const double*) { return 1.5; });
  const DeltaResult r = borgonovo_delta(c.view(), c.y);
  CHECK(r.degenerate);
  CHECK(r.delta == std::vector<double>{0.0, 0.0});
  const Sample small = uniform_sample(100, 2, 5, [](const double* z) { return z[0]; });
  CHECK_THROWS_AS(borgonovo_delta(small.view(), small.y), SizingError);
}

TEST_CASE("bootstrap intervals") {
  const auto f = [](const double* z) { return z[0] + 0.5 * z[1]; };
  DeltaOptions o;
  o.partitions = 16;
  const Sample a = uniform_sample(1000, 2, 6, f);
  const Sample b = uniform_sample(10000, 2, 6, f);
  const DeltaEstimate ea = bootstrap_ci(a.view(), a.y, o, 50, 0.9, 1);
  const DeltaEstimate eb = bootstrap_ci(b.view(), b.y, o, 50, 0.9, 1);
  const DeltaEstimate again = bootstrap_ci(a.view(), a.y, o, 50, 0.9, 1);
  CHECK(again.lower == ea.lower);
  CHECK(again.upper == ea.upper);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(ea.lower[k] <= ea.delta[k]);
    CHECK(ea.delta[k] <= ea.upper[k]);
    CHECK(eb.upper[k] - eb.lower[k] < ea.upper[k] - ea.lower[k]);
  }
}

TEST_CASE("convergence curve") {
  const Sample s = uniform_sample(64000, 3, 8, [](const double* z) { return z[0] + 0.8 * z[1] + 0.6 * z[2]; });
  DeltaOptions o;
  o.partitions = 16;
  const auto curve = convergence_curve(s.view(), s.y, {4000, 16000, 64000}, o, 40, 0.9, 2);
  REQUIRE(curve.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    const double w0 = curve[0].upper[k] - curve[0].lower[k];
    const double w1 = curve[1].upper[k] - curve[1].lower[k];
    const double w2 = curve[2].upper[k] - curve[2].lower[k];
    CHECK(w1 < w0);
    CHECK(w2 < w1);
  }
  CHECK(convergence_curve(s.view(), s.y, {2000}, o, 10, 0.9, 2).size() == 1);
}

TEST_CASE("field maps and screening") {
  McDataset ds;
  ds.prior = PriorSpec::screening();
  ds.rows = 1000;
  ds.design = sample_prior(ds.prior, ds.rows, 3);
  ds.field_cells = {0, 1, 2};
  ds.field_x = {1.0, 2.0, 3.0};
  ds.field_y = {4.0, 4.0, 4.0};
  ds.field_initial = {0.0, 0.0, 0.0};
  ds.probe_names = {"wet", "dry"};
  ds.times = {0.0, 1.0};
  ds.status.assign(ds.rows, 1);
  ds.failures.assign(ds.rows, "");
  const int a = ds.prior.column(Param::AlphaMpm);
  const int b = ds.prior.column(Param::Beta);
  for (std::size_t i = 0; i < ds.rows; ++i) {
    const double* row = ds.design_row(i);
    ds.outputs_field.insert(ds.outputs_field.end(), {row[a] / 32.0, 0.25, row[a] / 32.0 + 0.02 * row[b]});
    ds.outputs_probe.insert(ds.outputs_probe.end(), {row[a], row[a] + row[b], 0.0, 0.0});
    ds.outputs_depth.insert(ds.outputs_depth.end(), {0.1, 0.1, 0.0, 0.0});
  }
  ds.status[7] = 0;
  std::fill(ds.outputs_field.begin() + 21, ds.outputs_field.begin() + 24, std::nan(""));

  FieldSensitivityOptions o;
  o.delta.partitions = 10;
  const SensitivityMap m = field_sensitivity(ds, SensitivityTarget::Field, o);
  CHECK(m.rows_used == 999);
  CHECK(m.size() == 3);
  CHECK(m.degenerate[1] == 1);
  CHECK(m.at(1, 0) == 0.0);
  CHECK(m.degenerate[0] == 0);

  const auto ranking = screen(m, 0.05);
  REQUIRE(ranking.size() == 6);
  CHECK(ranking.front().input == "alpha_mpm");
  for (const auto& e : ranking) {
    if (e.input == "theta_cr" || e.input == "porosity") CHECK(e.negligible);
  }

  const SensitivityMap p = field_sensitivity(ds, SensitivityTarget::Probe, o);
  REQUIRE(p.size() == 4);
  CHECK(p.undefined[0] == 0);
  CHECK(p.undefined[2] == 1);
  CHECK(std::isnan(p.at(2, 0)));
}
