#include "morphouq/emulator/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "morphouq/errors.hpp"
#include "morphouq/io/container.hpp"
#include "morphouq/io/hash.hpp"
#include "morphouq/parallel.hpp"
#include "morphouq/rng.hpp"
#include "morphouq/simd/kernels.hpp"

namespace morphouq {

Scaling Scaling::fit(std::span<const double> data, std::size_t width) {
  if (width == 0 || data.size() % width != 0 || data.empty()) {
    throw ModelError("scaling: data is not a whole number of rows");
  }
  Scaling s;
  s.min.assign(width, std::numeric_limits<double>::infinity());
  s.max.assign(width, -std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const std::size_t i = k % width;
    s.min[i] = std::min(s.min[i], data[k]);
    s.max[i] = std::max(s.max[i], data[k]);
  }
  s.constant.assign(width, 0);
  for (std::size_t i = 0; i < width; ++i) {
    if (!std::isfinite(s.min[i]) || !std::isfinite(s.max[i])) {
      throw ModelError("scaling: non-finite value in feature " + std::to_string(i));
    }
    if (!(s.max[i] > s.min[i])) s.constant[i] = 1;
  }
  return s;
}

bool Scaling::scale(std::span<const double> in, std::span<double> out) const {
  bool outside = false;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t i = k % size();
    if (constant[i] == 0 && (in[k] < min[i] || in[k] > max[i])) outside = true;
    out[k] = (in[k] - offset(i)) / span(i);
  }
  return outside;
}

void Scaling::unscale(std::span<const double> in, std::span<double> out) const {
  for (std::size_t k = 0; k < in.size(); ++k) {
    const std::size_t i = k % size();
    out[k] = in[k] * span(i) + offset(i);
  }
}

namespace {

Scaling identity_scaling(std::size_t n) {
  Scaling s;
  s.min.assign(n, 0.0);
  s.max.assign(n, 1.0);
  s.constant.assign(n, 0);
  return s;
}

void check_sizes(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  if (in == 0 || out == 0) throw ModelError("network input and output sizes must be positive");
  for (std::size_t h : hidden) {
    if (h == 0) throw ModelError("hidden layer widths must be positive");
  }
}

MlpModel shaped(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  check_sizes(in, hidden, out);
  MlpModel m;
  std::size_t prev = in;
  for (std::size_t k = 0; k <= hidden.size(); ++k) {
    Layer l;
    l.in = prev;
    l.out = k < hidden.size() ? hidden[k] : out;
    l.relu = k < hidden.size();
    l.w.assign(l.in * l.out, 0.0);
    l.b.assign(l.out, 0.0);
    prev = l.out;
    m.layers.push_back(std::move(l));
  }
  m.input_scaling = identity_scaling(in);
  m.output_scaling = identity_scaling(out);
  return m;
}

// Activations of every layer for a batch of scaled inputs; acts[0] is the input.
std::vector<std::vector<double>> forward_all(const MlpModel& m, const double* x, std::size_t batch) {
  const auto& k = simd::active_kernels();
  std::vector<std::vector<double>> acts(m.layers.size() + 1);
  acts[0].assign(x, x + batch * m.input_size());
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    const Layer& L = m.layers[l];
    acts[l + 1].resize(batch * L.out);
    k.dense_forward(L.w.data(), L.b.data(), acts[l].data(), acts[l + 1].data(), batch, L.in, L.out,
                    L.relu);
  }
  return acts;
}

// Back-propagates `delta` (batch x out of the last layer, gradient w.r.t. the
// scaled outputs) to the scaled inputs, optionally accumulating weight
// gradients.
std::vector<double> backward(const MlpModel& m, const std::vector<std::vector<double>>& acts,
                             std::vector<double> delta, std::size_t batch,
                             std::vector<std::vector<double>>* gw,
                             std::vector<std::vector<double>>* gb) {
  const auto& k = simd::active_kernels();
  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const Layer& L = m.layers[l];
    if (L.relu) {
      const auto& a = acts[l + 1];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (!(a[i] > 0.0)) delta[i] = 0.0;
      }
    }
    if (gw != nullptr) {
      auto& w = (*gw)[l];
      auto& b = (*gb)[l];
      std::fill(w.begin(), w.end(), 0.0);
      std::fill(b.begin(), b.end(), 0.0);
      for (std::size_t s = 0; s < batch; ++s) {
        const double* x = acts[l].data() + s * L.in;
        for (std::size_t o = 0; o < L.out; ++o) {
          const double d = delta[s * L.out + o];
          if (d == 0.0) continue;
          k.axpy(d, x, w.data() + o * L.in, L.in);
          b[o] += d;
        }
      }
    }
    std::vector<double> prev(batch * L.in, 0.0);
    if (l > 0 || gw == nullptr) {
      for (std::size_t s = 0; s < batch; ++s) {
        for (std::size_t o = 0; o < L.out; ++o) {
          const double d = delta[s * L.out + o];
          if (d == 0.0) continue;
          k.axpy(d, L.w.data() + o * L.in, prev.data() + s * L.in, L.in);
        }
      }
    }
    delta = std::move(prev);
  }
  return delta;
}

std::vector<double> scaled_input(const MlpModel& m, std::span<const double> input, bool* extrapolated) {
  if (input.size() != m.input_size()) {
    throw ModelError("emulator expects " + std::to_string(m.input_size()) + " inputs, got " +
                     std::to_string(input.size()));
  }
  std::vector<double> x(input.size());
  const bool outside = m.input_scaling.scale(input, x);
  if (extrapolated != nullptr) *extrapolated = outside;
  return x;
}

}  // namespace

std::vector<std::size_t> MlpModel::hidden() const {
  std::vector<std::size_t> h;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) h.push_back(layers[l].out);
  return h;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += l.w.size() + l.b.size();
  return n;
}

MlpModel MlpModel::zeros(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  return shaped(in, hidden, out);
}

MlpModel MlpModel::random(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                          std::uint64_t seed) {
  MlpModel m = shaped(in, hidden, out);
  Rng rng = make_rng(seed, 0x494e4954ULL);
  for (Layer& l : m.layers) {
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in));
    for (double& w : l.w) w = bound * (2.0 * uniform01(rng) - 1.0);
  }
  return m;
}

void MlpModel::validate() const {
  if (layers.empty()) throw ModelError("model has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& L = layers[l];
    if (L.in == 0 || L.out == 0 || L.w.size() != L.in * L.out || L.b.size() != L.out) {
      throw ModelError("layer " + std::to_string(l) + " has inconsistent shapes");
    }
    if (l > 0 && layers[l - 1].out != L.in) {
      throw ModelError("layer " + std::to_string(l) + " input does not match previous output");
    }
    if (L.relu == (l + 1 == layers.size())) {
      throw ModelError("rectifiers are expected on hidden layers only");
    }
  }
  auto check = [](const Scaling& s, std::size_t n, const char* what) {
    if (s.min.size() != n || s.max.size() != n || s.constant.size() != n) {
      throw ModelError(std::string(what) + " scaling width does not match the network");
    }
  };
  check(input_scaling, input_size(), "input");
  check(output_scaling, output_size(), "output");
  if (output_x.size() != output_y.size() || (!output_x.empty() && output_x.size() != output_size())) {
    throw ModelError("output coordinates do not match the network");
  }
  if (!input_names.empty() && input_names.size() != input_size()) {
    throw ModelError("input name count does not match the network");
  }
}

std::vector<double> predict(const MlpModel& model, std::span<const double> input, bool* extrapolated) {
  const std::vector<double> x = scaled_input(model, input, extrapolated);
  auto acts = forward_all(model, x.data(), 1);
  std::vector<double> out(model.output_size());
  model.output_scaling.unscale(acts.back(), out);
  return out;
}

std::vector<double> predict_batch(const MlpModel& model, std::span<const double> inputs,
                                  std::size_t rows) {
  const std::size_t d = model.input_size();
  if (inputs.size() != rows * d) throw ModelError("batch input size mismatch");
  std::vector<double> x(inputs.size());
  model.input_scaling.scale(inputs, x);
  auto acts = forward_all(model, x.data(), rows);
  std::vector<double> out(rows * model.output_size());
  model.output_scaling.unscale(acts.back(), out);
  return out;
}

std::vector<double> input_gradient(const MlpModel& model, std::span<const double> input) {
  const std::vector<double> x = scaled_input(model, input, nullptr);
  const auto acts = forward_all(model, x.data(), 1);
  const std::size_t m = model.output_size();
  const std::size_t d = model.input_size();
  const auto& k = simd::active_kernels();
  // Row r of `rows` is d(output r)/d(activations of the current layer).
  std::vector<double> rows(m * m, 0.0);
  for (std::size_t r = 0; r < m; ++r) rows[r * m + r] = model.output_scaling.span(r);
  for (std::size_t l = model.layers.size(); l-- > 0;) {
    const Layer& L = model.layers[l];
    if (L.relu) {
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t o = 0; o < L.out; ++o) {
          if (!(acts[l + 1][o] > 0.0)) rows[r * L.out + o] = 0.0;
        }
      }
    }
    std::vector<double> prev(m * L.in, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t o = 0; o < L.out; ++o) {
        const double v = rows[r * L.out + o];
        if (v != 0.0) k.axpy(v, L.w.data() + o * L.in, prev.data() + r * L.in, L.in);
      }
    }
    rows = std::move(prev);
  }
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t i = 0; i < d; ++i) rows[r * d + i] /= model.input_scaling.span(i);
  }
  return rows;
}

VjpResult predict_vjp(const MlpModel& model, std::span<const double> input,
                      const std::function<std::vector<double>(const std::vector<double>&)>& seed_of) {
  const std::vector<double> x = scaled_input(model, input, nullptr);
  const auto acts = forward_all(model, x.data(), 1);
  VjpResult r;
  r.output.resize(model.output_size());
  model.output_scaling.unscale(acts.back(), r.output);
  const std::vector<double> seed = seed_of(r.output);
  if (seed.size() != model.output_size()) throw ModelError("seed size does not match the outputs");
  std::vector<double> delta(seed.size());
  for (std::size_t i = 0; i < seed.size(); ++i) delta[i] = seed[i] * model.output_scaling.span(i);
  r.gradient = backward(model, acts, std::move(delta), 1, nullptr, nullptr);
  for (std::size_t i = 0; i < r.gradient.size(); ++i) r.gradient[i] /= model.input_scaling.span(i);
  return r;
}

VjpResult predict_vjp(const MlpModel& model, std::span<const double> input,
                      std::span<const double> seed) {
  const std::vector<double> s(seed.begin(), seed.end());
  return predict_vjp(model, input, [&](const std::vector<double>&) { return s; });
}

nlohmann::json TrainHyper::to_json() const {
  return {{"hidden", hidden},
          {"epochs", epochs},
          {"batch", batch},
          {"learning_rate", learning_rate},
          {"seed", seed},
          {"adam", {0.9, 0.999, 1e-8}}};
}

std::vector<std::size_t> topology_preset(const std::string& name) {
  if (name == "paper5") return {113, 88, 116, 128, 124};
  throw ConfigError("unknown topology preset '" + name + "' (expected paper5)");
}

nlohmann::json TrainReport::to_json() const {
  return {{"train_loss", train_loss}, {"val_loss", val_loss},   {"best_epoch", best_epoch},
          {"best_val_loss", best_val_loss}, {"mae", mae}, {"hyper", hyper.to_json()}};
}

namespace {

void check_set(const TrainingSet& s, const char* what) {
  if (s.rows == 0) throw SizingError(std::string(what) + " set is empty");
  if (s.inputs.size() != s.rows * s.in || s.outputs.size() != s.rows * s.out) {
    throw SizingError(std::string(what) + " set arrays do not match its shape");
  }
}

std::vector<std::size_t> canonical_order(const TrainingSet& s) {
  std::vector<std::uint64_t> key(s.rows);
  for (std::size_t r = 0; r < s.rows; ++r) {
    io::Fnv1a h;
    h.update(std::span<const double>(s.inputs.data() + r * s.in, s.in));
    h.update(std::span<const double>(s.outputs.data() + r * s.out, s.out));
    key[r] = h.digest();
  }
  std::vector<std::size_t> order(s.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (key[a] != key[b]) return key[a] < key[b];
    const double* xa = s.inputs.data() + a * s.in;
    const double* xb = s.inputs.data() + b * s.in;
    if (!std::equal(xa, xa + s.in, xb)) return std::lexicographical_compare(xa, xa + s.in, xb, xb + s.in);
    const double* ya = s.outputs.data() + a * s.out;
    const double* yb = s.outputs.data() + b * s.out;
    return std::lexicographical_compare(ya, ya + s.out, yb, yb + s.out);
  });
  return order;
}

struct AdamState {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  std::size_t t = 0;
};

}  // namespace

double scaled_mse(const MlpModel& model, const TrainingSet& set) {
  check_set(set, "evaluation");
  std::vector<double> x(set.inputs.size());
  model.input_scaling.scale(set.inputs, x);
  std::vector<double> y(set.outputs.size());
  model.output_scaling.scale(set.outputs, y);
  const auto acts = forward_all(model, x.data(), set.rows);
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = acts.back()[i] - y[i];
    s += e * e;
  }
  return s / static_cast<double>(y.size());
}

double mean_absolute_error(const MlpModel& model, const TrainingSet& set) {
  check_set(set, "evaluation");
  const std::vector<double> p = predict_batch(model, set.inputs, set.rows);
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - set.outputs[i]);
  return s / static_cast<double>(p.size());
}

TrainResult train(const TrainingSet& train_set, const TrainingSet& val_set, const TrainHyper& hyper,
                  const std::vector<std::string>& input_names,
                  const std::function<void(std::size_t, double, double)>& progress) {
  check_set(train_set, "training");
  check_set(val_set, "validation");
  if (val_set.in != train_set.in || val_set.out != train_set.out) {
    throw SizingError("training and validation sets differ in width");
  }
  if (hyper.batch == 0) throw ConfigError("batch size must be positive");
  if (hyper.epochs == 0) throw ConfigError("epoch count must be positive");
  if (!(hyper.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");

  const std::size_t n = train_set.rows;
  const std::size_t din = train_set.in;
  const std::size_t dout = train_set.out;
  MlpModel model = MlpModel::random(din, hyper.hidden, dout, hyper.seed);
  model.input_names = input_names;
  model.input_scaling = Scaling::fit(train_set.inputs, din);
  model.output_scaling = Scaling::fit(train_set.outputs, dout);
  model.validate();

  const std::vector<std::size_t> canon = canonical_order(train_set);
  std::vector<double> xs(n * din);
  std::vector<double> ys(n * dout);
  {
    std::vector<double> tmp_x(n * din);
    std::vector<double> tmp_y(n * dout);
    model.input_scaling.scale(train_set.inputs, tmp_x);
    model.output_scaling.scale(train_set.outputs, tmp_y);
    for (std::size_t r = 0; r < n; ++r) {
      std::copy_n(tmp_x.begin() + static_cast<std::ptrdiff_t>(canon[r] * din), din,
                  xs.begin() + static_cast<std::ptrdiff_t>(r * din));
      std::copy_n(tmp_y.begin() + static_cast<std::ptrdiff_t>(canon[r] * dout), dout,
                  ys.begin() + static_cast<std::ptrdiff_t>(r * dout));
    }
  }

  const auto& k = simd::active_kernels();
  AdamState adam;
  std::vector<std::vector<double>> gw;
  std::vector<std::vector<double>> gb;
  for (const Layer& l : model.layers) {
    adam.mw.emplace_back(l.w.size(), 0.0);
    adam.vw.emplace_back(l.w.size(), 0.0);
    adam.mb.emplace_back(l.b.size(), 0.0);
    adam.vb.emplace_back(l.b.size(), 0.0);
    gw.emplace_back(l.w.size(), 0.0);
    gb.emplace_back(l.b.size(), 0.0);
  }

  TrainResult result;
  result.report.hyper = hyper;
  std::vector<Layer> best_layers = model.layers;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> perm(n);
  std::vector<double> xb;
  std::vector<double> yb;
  simd::AdamStep step;
  step.lr = hyper.learning_rate;

  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng = make_rng(hyper.seed, epoch + 1);
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[uniform_index(rng, i)]);
    double epoch_sse = 0.0;
    for (std::size_t start = 0; start < n; start += hyper.batch) {
      const std::size_t bs = std::min(hyper.batch, n - start);
      xb.resize(bs * din);
      yb.resize(bs * dout);
      for (std::size_t s = 0; s < bs; ++s) {
        const std::size_t r = perm[start + s];
        std::copy_n(xs.begin() + static_cast<std::ptrdiff_t>(r * din), din,
                    xb.begin() + static_cast<std::ptrdiff_t>(s * din));
        std::copy_n(ys.begin() + static_cast<std::ptrdiff_t>(r * dout), dout,
                    yb.begin() + static_cast<std::ptrdiff_t>(s * dout));
      }
      const auto acts = forward_all(model, xb.data(), bs);
      std::vector<double> delta(bs * dout);
      const double norm = 2.0 / static_cast<double>(bs * dout);
      for (std::size_t i = 0; i < delta.size(); ++i) {
        const double e = acts.back()[i] - yb[i];
        epoch_sse += e * e;
        delta[i] = norm * e;
      }
      backward(model, acts, std::move(delta), bs, &gw, &gb);
      ++adam.t;
      step.bias1 = 1.0 - std::pow(step.beta1, static_cast<double>(adam.t));
      step.bias2 = 1.0 - std::pow(step.beta2, static_cast<double>(adam.t));
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        Layer& L = model.layers[l];
        k.adam_update(L.w.data(), adam.mw[l].data(), adam.vw[l].data(), gw[l].data(), L.w.size(), step);
        k.adam_update(L.b.data(), adam.mb[l].data(), adam.vb[l].data(), gb[l].data(), L.b.size(), step);
      }
    }
    const double train_loss = epoch_sse / static_cast<double>(n * dout);
    const double val_loss = scaled_mse(model, val_set);
    if (!std::isfinite(train_loss) || !std::isfinite(val_loss)) {
      throw TrainingError("training diverged at epoch " + std::to_string(epoch + 1) +
                          " (non-finite loss)");
    }
    result.report.train_loss.push_back(train_loss);
    result.report.val_loss.push_back(val_loss);
    if (val_loss < best) {
      best = val_loss;
      best_layers = model.layers;
      result.report.best_epoch = epoch + 1;
    }
    if (progress) progress(epoch + 1, train_loss, val_loss);
  }
  model.layers = std::move(best_layers);
  result.report.best_val_loss = best;
  result.report.mae = mean_absolute_error(model, val_set);
  result.model = std::move(model);
  return result;
}

double Q2Result::median() const {
  std::vector<double> v;
  for (std::size_t i = 0; i < q2.size(); ++i) {
    if (undefined[i] == 0) v.push_back(q2[i]);
  }
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Q2Result q2_field(const MlpModel& model, const TrainingSet& test, bool printed) {
  check_set(test, "test");
  if (test.out != model.output_size()) throw ModelError("test outputs do not match the network");
  const std::vector<double> p = predict_batch(model, test.inputs, test.rows);
  const std::size_t m = test.out;
  Q2Result r;
  r.q2.assign(m, 0.0);
  r.undefined.assign(m, 0);
  for (std::size_t c = 0; c < m; ++c) {
    double mean = 0.0;
    for (std::size_t i = 0; i < test.rows; ++i) mean += test.outputs[i * m + c];
    mean /= static_cast<double>(test.rows);
    double sse = 0.0;
    double var = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < test.rows; ++i) {
      const double y = test.outputs[i * m + c];
      const double e = p[i * m + c] - y;
      sse += e * e;
      var += (y - mean) * (y - mean);
      const double dev = printed ? p[i * m + c] - mean : y - mean;
      den += dev * dev;
    }
    if (!(var > 0.0) || !(den > 0.0)) {
      r.q2[c] = std::numeric_limits<double>::quiet_NaN();
      r.undefined[c] = 1;
    } else {
      r.q2[c] = 1.0 - sse / den;
    }
  }
  return r;
}

double physical_range_fraction(const MlpModel& model, const TrainingSet& train_set,
                               const TrainingSet& test) {
  check_set(train_set, "training");
  check_set(test, "test");
  const std::size_t m = train_set.out;
  const std::vector<double> p = predict_batch(model, test.inputs, test.rows);
  std::size_t inside = 0;
  for (std::size_t c = 0; c < m; ++c) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double mean = 0.0;
    for (std::size_t i = 0; i < train_set.rows; ++i) {
      const double y = train_set.outputs[i * m + c];
      lo = std::min(lo, y);
      hi = std::max(hi, y);
      mean += y;
    }
    mean /= static_cast<double>(train_set.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < train_set.rows; ++i) {
      const double e = train_set.outputs[i * m + c] - mean;
      var += e * e;
    }
    const double sd = std::sqrt(var / static_cast<double>(train_set.rows));
    for (std::size_t i = 0; i < test.rows; ++i) {
      const double v = p[i * m + c];
      if (v >= lo - 3.0 * sd && v <= hi + 3.0 * sd) ++inside;
    }
  }
  return static_cast<double>(inside) / static_cast<double>(m * test.rows);
}

TopologySearch topology_search(const TrainingSet& train_set, const TrainingSet& val_set,
                               TrainHyper hyper, std::size_t trials, unsigned jobs,
                               std::size_t max_layers, std::size_t min_units,
                               std::size_t max_units) {
  if (trials == 0) throw ConfigError("topology search needs at least one trial");
  if (max_layers == 0 || min_units == 0 || max_units < min_units) {
    throw ConfigError("topology search space is empty");
  }
  TopologySearch out;
  out.trials.resize(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(hyper.seed, 0x544f504fULL + t);
    const std::size_t layers = 1 + uniform_index(rng, max_layers);
    for (std::size_t l = 0; l < layers; ++l) {
      out.trials[t].hidden.push_back(min_units + uniform_index(rng, max_units - min_units + 1));
    }
  }
  parallel_for(trials, jobs, [&](std::size_t t) {
    TrainHyper h = hyper;
    h.hidden = out.trials[t].hidden;
    h.seed = splitmix64(hyper.seed + t);
    out.trials[t].val_loss = train(train_set, val_set, h).report.best_val_loss;
  });
  for (std::size_t t = 1; t < trials; ++t) {
    if (out.trials[t].val_loss < out.trials[out.best].val_loss) out.best = t;
  }
  return out;
}

void save_model(const std::filesystem::path& path, const MlpModel& model, const nlohmann::json& extra) {
  model.validate();
  io::Container c;
  c.kind = "mlp_model";
  std::vector<std::size_t> sizes{model.input_size()};
  for (const Layer& l : model.layers) sizes.push_back(l.out);
  std::vector<int> in_const(model.input_scaling.constant.begin(), model.input_scaling.constant.end());
  std::vector<int> out_const(model.output_scaling.constant.begin(), model.output_scaling.constant.end());
  c.meta = {{"sizes", sizes},
            {"activations", "relu hidden, identity output"},
            {"input_names", model.input_names},
            {"input_constant", in_const},
            {"output_constant", out_const},
            {"output_x", model.output_x},
            {"output_y", model.output_y},
            {"extra", extra}};
  auto append = [&](const std::vector<double>& v) { c.payload.insert(c.payload.end(), v.begin(), v.end()); };
  append(model.input_scaling.min);
  append(model.input_scaling.max);
  append(model.output_scaling.min);
  append(model.output_scaling.max);
  for (const Layer& l : model.layers) {
    append(l.w);
    append(l.b);
  }
  io::write_container(path, c);
}

MlpModel load_model(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path, "mlp_model");
  MlpModel m;
  try {
    const auto sizes = c.meta.at("sizes").get<std::vector<std::size_t>>();
    if (sizes.size() < 2) throw FormatError(path.string() + ": model needs at least one layer");
    std::vector<std::size_t> hidden(sizes.begin() + 1, sizes.end() - 1);
    m = shaped(sizes.front(), hidden, sizes.back());
    m.input_names = c.meta.at("input_names").get<std::vector<std::string>>();
    m.output_x = c.meta.at("output_x").get<std::vector<double>>();
    m.output_y = c.meta.at("output_y").get<std::vector<double>>();
    io::PayloadReader in(c.payload);
    const std::size_t din = m.input_size();
    const std::size_t dout = m.output_size();
    m.input_scaling.min = in.take(din);
    m.input_scaling.max = in.take(din);
    m.output_scaling.min = in.take(dout);
    m.output_scaling.max = in.take(dout);
    m.input_scaling.constant.clear();
    m.output_scaling.constant.clear();
    for (int v : c.meta.at("input_constant").get<std::vector<int>>()) {
      m.input_scaling.constant.push_back(static_cast<std::uint8_t>(v));
    }
    for (int v : c.meta.at("output_constant").get<std::vector<int>>()) {
      m.output_scaling.constant.push_back(static_cast<std::uint8_t>(v));
    }
    for (Layer& l : m.layers) {
      l.w = in.take(l.w.size());
      l.b = in.take(l.b.size());
    }
    if (!in.exhausted()) throw FormatError(path.string() + ": trailing payload");
    m.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": malformed model metadata (" + e.what() + ")");
  } catch (const ModelError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace morphouq
