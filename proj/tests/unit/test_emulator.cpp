#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "morphouq/emulator/mlp.hpp"
#include "morphouq/errors.hpp"
#include "morphouq/rng.hpp"

using namespace morphouq;

namespace {

std::string file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

/// y = A x + b on inputs drawn from [lo, hi]^in.
TrainingSet linear_set(std::size_t rows, std::size_t in, std::size_t out, std::uint64_t seed) {
  Rng coef = make_rng(1000);
  std::vector<double> a(in * out);
  std::vector<double> b(out);
  for (double& v : a) v = 2.0 * uniform01(coef) - 1.0;
  for (double& v : b) v = uniform01(coef);
  Rng rng = make_rng(seed);
  TrainingSet s;
  s.rows = rows;
  s.in = in;
  s.out = out;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> x(in);
    for (std::size_t i = 0; i < in; ++i) x[i] = 2.0 + 8.0 * uniform01(rng) * (i + 1);
    s.inputs.insert(s.inputs.end(), x.begin(), x.end());
    for (std::size_t o = 0; o < out; ++o) {
      double y = b[o];
      for (std::size_t i = 0; i < in; ++i) y += a[o * in + i] * x[i];
      s.outputs.push_back(y);
    }
  }
  return s;
}

/// Smallest |pre-activation| over the hidden units, in scaled units.
double kink_distance(const MlpModel& m, const std::vector<double>& input) {
  std::vector<double> x(input.size());
  m.input_scaling.scale(input, x);
  double closest = 1e300;
  for (const Layer& l : m.layers) {
    std::vector<double> y(l.out);
    for (std::size_t o = 0; o < l.out; ++o) {
      double s = l.b[o];
      for (std::size_t i = 0; i < l.in; ++i) s += l.w[o * l.in + i] * x[i];
      if (l.relu) closest = std::min(closest, std::abs(s));
      y[o] = l.relu ? std::max(0.0, s) : s;
    }
    x = y;
  }
  return closest;
}

MlpModel random_scaled_model(std::uint64_t seed, const std::vector<std::size_t>& hidden) {
  MlpModel m = MlpModel::random(4, hidden, 6, seed);
  Rng rng = make_rng(seed, 77);
  for (std::size_t i = 0; i < 4; ++i) {
    m.input_scaling.min[i] = uniform01(rng);
    m.input_scaling.max[i] = m.input_scaling.min[i] + 1.0 + 30.0 * uniform01(rng);
  }
  for (std::size_t o = 0; o < 6; ++o) {
    m.output_scaling.min[o] = -0.1 * uniform01(rng);
    m.output_scaling.max[o] = 0.1 + 0.2 * uniform01(rng);
  }
  for (Layer& l : m.layers) {
    for (double& b : l.b) b = 0.2 * uniform01(rng) - 0.1;
  }
  return m;
}

}  // namespace

TEST_CASE("min-max scaling") {
  const std::vector<double> data = {1.0, 5.0, 3.0, 5.0, 2.0, 5.0};
  const Scaling s = Scaling::fit(data, 2);
  CHECK(s.constant[0] == 0);
  CHECK(s.constant[1] == 1);
  std::vector<double> out(2);
  s.scale(std::vector<double>{1.0, 5.0}, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 5.0);
  s.scale(std::vector<double>{3.0, 5.0}, out);
  CHECK(out[0] == 1.0);
  CHECK(s.scale(std::vector<double>{4.0, 5.0}, out));

  Rng rng = make_rng(1);
  for (int t = 0; t < 200; ++t) {
    const std::vector<double> v = {1.0 + 2.0 * uniform01(rng), 5.0};
    std::vector<double> back(2);
    s.scale(v, out);
    s.unscale(out, back);
    CHECK(std::abs(back[0] - v[0]) < 1e-14);
    CHECK(back[1] == v[1]);
  }
}

TEST_CASE("degenerate architectures") {
  MlpModel z = MlpModel::zeros(3, {5, 4}, 2);
  z.layers.back().b = {0.25, -0.5};
  z.output_scaling.min = {1.0, 2.0};
  z.output_scaling.max = {3.0, 6.0};
  z.output_scaling.constant = {0, 0};
  const auto y = predict(z, std::vector<double>{0.3, 0.1, 0.9});
  CHECK(y[0] == doctest::Approx(1.5));
  CHECK(y[1] == doctest::Approx(0.0));
  const auto g = input_gradient(z, std::vector<double>{0.3, 0.1, 0.9});
  for (double v : g) CHECK(v == 0.0);

  MlpModel lin = MlpModel::random(3, {}, 2, 4);
  lin.input_scaling.min = {0.0, 1.0, -2.0};
  lin.input_scaling.max = {2.0, 5.0, 2.0};
  lin.output_scaling.min = {0.0, 10.0};
  lin.output_scaling.max = {0.5, 30.0};
  const auto j = input_gradient(lin, std::vector<double>{1.0, 2.0, 0.0});
  for (std::size_t o = 0; o < 2; ++o) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double expect = lin.layers[0].w[o * 3 + i] * lin.output_scaling.span(o) / lin.input_scaling.span(i);
      CHECK(j[o * 3 + i] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
  // Affine: the prediction at the midpoint is the mean of the endpoints.
  const auto a = predict(lin, std::vector<double>{0.0, 1.0, -2.0});
  const auto b = predict(lin, std::vector<double>{2.0, 5.0, 2.0});
  const auto mid = predict(lin, std::vector<double>{1.0, 3.0, 0.0});
  for (std::size_t o = 0; o < 2; ++o) CHECK(mid[o] == doctest::Approx(0.5 * (a[o] + b[o])).epsilon(1e-12));

  CHECK_THROWS_AS(predict(lin, std::vector<double>{1.0}), ModelError);
}

TEST_CASE("input gradient against finite differences") {
  Rng rng = make_rng(12);
  std::size_t checked = 0;
  for (std::uint64_t trial = 0; checked < 100; ++trial) {
    const MlpModel m = random_scaled_model(trial, {16, 12, 8});
    std::vector<double> x(4);
    for (std::size_t i = 0; i < 4; ++i) {
      x[i] = m.input_scaling.min[i] + uniform01(rng) * m.input_scaling.span(i);
    }
    if (kink_distance(m, x) < 1e-3) continue;
    ++checked;
    const auto jac = input_gradient(m, x);
    for (std::size_t i = 0; i < 4; ++i) {
      const double h = 1e-6 * m.input_scaling.span(i);
      auto xp = x;
      auto xm = x;
      xp[i] += h;
      xm[i] -= h;
      const auto yp = predict(m, xp);
      const auto ym = predict(m, xm);
      for (std::size_t o = 0; o < 6; ++o) {
        const double fd = (yp[o] - ym[o]) / (2.0 * h);
        const double scale = std::max(std::abs(fd), 1e-3 * m.output_scaling.span(o) / m.input_scaling.span(i));
        CHECK(std::abs(jac[o * 4 + i] - fd) / scale < 1e-5);
      }
    }
    const std::vector<double> seed = {1.0, -2.0, 0.5, 0.0, 3.0, 1.5};
    const VjpResult v = predict_vjp(m, x, seed);
    for (std::size_t i = 0; i < 4; ++i) {
      double expect = 0.0;
      for (std::size_t o = 0; o < 6; ++o) expect += seed[o] * jac[o * 4 + i];
      CHECK(v.gradient[i] == doctest::Approx(expect).epsilon(1e-10));
    }
  }
}

TEST_CASE("training recovers a linear map") {
  const TrainingSet tr = linear_set(400, 4, 20, 1);
  const TrainingSet va = linear_set(100, 4, 20, 2);
  TrainHyper h;
  h.hidden = {};
  h.epochs = 2000;
  h.batch = 32;
  h.learning_rate = 1e-2;
  h.seed = 3;
  const TrainResult r = train(tr, va, h);
  CHECK(r.report.best_val_loss < 1e-6);
  CHECK(scaled_mse(r.model, va) < 1e-6);

  const Q2Result q = q2_field(r.model, va);
  for (double v : q.q2) CHECK(v > 0.999999);
  CHECK(physical_range_fraction(r.model, tr, va) == 1.0);
}

TEST_CASE("zero learning rate keeps the initial weights") {
  const TrainingSet tr = linear_set(64, 3, 5, 1);
  const TrainingSet va = linear_set(16, 3, 5, 2);
  TrainHyper h;
  h.hidden = {8, 6};
  h.epochs = 5;
  h.learning_rate = 0.0;
  h.seed = 9;
  const TrainResult r = train(tr, va, h);
  const MlpModel init = MlpModel::random(3, {8, 6}, 5, 9);
  for (std::size_t l = 0; l < init.layers.size(); ++l) {
    CHECK(r.model.layers[l].w == init.layers[l].w);
    CHECK(r.model.layers[l].b == init.layers[l].b);
  }
}

TEST_CASE("training is deterministic and ignores row order") {
  TrainingSet tr = linear_set(120, 4, 7, 5);
  for (std::size_t i = 0; i < tr.outputs.size(); ++i) tr.outputs[i] = std::sin(tr.outputs[i]);
  TrainingSet va = linear_set(30, 4, 7, 6);
  for (std::size_t i = 0; i < va.outputs.size(); ++i) va.outputs[i] = std::sin(va.outputs[i]);
  TrainHyper h;
  h.hidden = {12, 10};
  h.epochs = 40;
  h.batch = 16;
  h.learning_rate = 3e-3;
  h.seed = 17;
  const auto a = train(tr, va, h);
  const auto b = train(tr, va, h);
  CHECK(a.report.train_loss == b.report.train_loss);
  CHECK(a.report.val_loss == b.report.val_loss);
  const auto dir = std::filesystem::temp_directory_path();
  save_model(dir / "morphouq_mlp_a.bin", a.model);
  save_model(dir / "morphouq_mlp_b.bin", b.model);
  CHECK(file_bytes(dir / "morphouq_mlp_a.bin") == file_bytes(dir / "morphouq_mlp_b.bin"));

  TrainingSet shuffled = tr;
  std::vector<std::size_t> perm(tr.rows);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[3], perm[40]);
  for (std::size_t r = 0; r < tr.rows; ++r) {
    std::copy_n(tr.inputs.begin() + perm[r] * 4, 4, shuffled.inputs.begin() + r * 4);
    std::copy_n(tr.outputs.begin() + perm[r] * 7, 7, shuffled.outputs.begin() + r * 7);
  }
  const auto c = train(shuffled, va, h);
  CHECK(c.report.val_loss == a.report.val_loss);
  for (std::size_t l = 0; l < a.model.layers.size(); ++l) CHECK(c.model.layers[l].w == a.model.layers[l].w);

  h.learning_rate = 1e200;
  CHECK_THROWS_AS(train(tr, va, h), TrainingError);
}

TEST_CASE("Q2 edge cases") {
  TrainingSet test;
  test.rows = 4;
  test.in = 1;
  test.out = 2;
  test.inputs = {0.0, 1.0, 2.0, 3.0};
  test.outputs = {1.0, 7.0, 2.0, 7.0, 3.0, 7.0, 6.0, 7.0};
  MlpModel mean = MlpModel::zeros(1, {3}, 2);
  mean.layers.back().b = {3.0, 7.0};
  const Q2Result q = q2_field(mean, test);
  CHECK(q.q2[0] == doctest::Approx(0.0));
  CHECK(q.undefined[1] == 1);
  CHECK(std::isnan(q.q2[1]));
  CHECK(q.median() == doctest::Approx(0.0));
}

TEST_CASE("topology presets and search") {
  CHECK(topology_preset("paper5") == std::vector<std::size_t>{113, 88, 116, 128, 124});
  CHECK_THROWS_AS(topology_preset("other"), ConfigError);

  const TrainingSet tr = linear_set(60, 2, 3, 1);
  const TrainingSet va = linear_set(20, 2, 3, 2);
  TrainHyper h;
  h.epochs = 5;
  h.batch = 16;
  h.learning_rate = 1e-3;
  const TopologySearch one = topology_search(tr, va, h, 1, 1, 3, 4, 16);
  REQUIRE(one.trials.size() == 1);
  CHECK(one.best == 0);
  const TopologySearch many = topology_search(tr, va, h, 6, 1, 3, 4, 16);
  CHECK(many.trials.front().hidden == one.trials.front().hidden);
  double running = 1e300;
  for (const auto& t : many.trials) {
    const double next = std::min(running, t.val_loss);
    CHECK(next <= running);
    running = next;
    CHECK(t.hidden.size() >= 1);
    CHECK(t.hidden.size() <= 3);
  }
  CHECK(many.trials[many.best].val_loss == running);
}

TEST_CASE("checkpoint round trip") {
  MlpModel m = random_scaled_model(3, {7, 5});
  m.input_names = {"alpha_mpm", "alpha_ks", "beta2", "beta"};
  m.output_x = {1, 2, 3, 4, 5, 6};
  m.output_y = {0, 0, 0, 1, 1, 1};
  const auto path = std::filesystem::temp_directory_path() / "morphouq_ckpt.bin";
  save_model(path, m, {{"note", "x"}});
  const MlpModel back = load_model(path);
  CHECK(back.input_names == m.input_names);
  CHECK(back.output_x == m.output_x);
  CHECK(back.hidden() == m.hidden());
  const std::vector<double> x = {3.0, 4.0, 5.0, 6.0};
  CHECK(predict(back, x) == predict(m, x));
  std::ofstream(path, std::ios::app) << "x";
  CHECK_THROWS_AS(load_model(path), FormatError);
  CHECK_THROWS_AS(load_model("/nonexistent/model.mlp"), FormatError);
}
