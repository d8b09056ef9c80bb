// Copyright 2026 The scene_forge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "scene_forge/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace scene_forge::nn {
namespace {

struct Subject {
  std::function<Tensor<double>(const Tensor<double>&)> forward;
  std::function<Tensor<double>(const Tensor<double>&)> backward;
  std::vector<Parameter<double>*> params;
};

double weighted_sum(const Tensor<double>& y, const Tensor<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
  return s;
}

GradCheckReport check(Subject& subject, Tensor<double> x, std::uint64_t seed, double step,
                      double kink_tolerance) {
  Rng rng(seed);
  const Tensor<double> y = subject.forward(x);
  Tensor<double> r(y.shape());
  for (auto& v : r.values()) v = rng.uniform(-1.0, 1.0);
  for (auto* p : subject.params) p->grad.fill(0.0);
  const Tensor<double> dx = subject.backward(r);

  const auto loss = [&] { return weighted_sum(subject.forward(x), r); };
  const double base = kink_tolerance > 0 ? loss() : 0.0;

  GradCheckReport report;
  report.input_shape = x.shape();
  const auto central = [&](double& coord, double h, double& plus, double& minus) {
    const double saved = coord;
    coord = saved + h;
    plus = loss();
    coord = saved - h;
    minus = loss();
    coord = saved;
    return (plus - minus) / (2 * h);
  };
  // Perturbs one coordinate; returns false when the stencil straddles a kink,
  // seen either as unequal one-sided slopes or as a central difference that
  // moves when the step shrinks tenfold (O(h^2) for a smooth loss).
  const auto probe = [&](double& coord, double& numeric) {
    double plus, minus;
    numeric = central(coord, step, plus, minus);
    ++report.coordinates;
    if (kink_tolerance <= 0) return true;
    const double scale = std::max(1.0, std::abs(base));
    bool kink = std::abs((plus - base) - (base - minus)) > kink_tolerance * scale;
    if (!kink) {
      const double fine = central(coord, step / 10, plus, minus);
      kink = std::abs(fine - numeric) > 10 * kink_tolerance * std::max(1.0, std::abs(numeric));
    }
    if (kink) ++report.skipped;
    return !kink;
  };

  std::vector<double> analytic, numeric;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double n;
    if (probe(x[i], n)) {
      analytic.push_back(dx[i]);
      numeric.push_back(n);
    }
  }
  report.input_error = max_relative_error(analytic, numeric);

  // All parameters share one error floor: a bias feeding batch norm has an
  // exactly zero gradient and no scale of its own.
  analytic.clear();
  numeric.clear();
  for (auto* p : subject.params) {
    const std::vector<double> grad(p->grad.values().begin(), p->grad.values().end());
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      double n;
      if (probe(p->value[i], n)) {
        analytic.push_back(grad[i]);
        numeric.push_back(n);
      }
    }
  }
  report.param_error = max_relative_error(analytic, numeric);
  return report;
}

void randomize_parameters(std::vector<Parameter<double>*> params, Rng& rng) {
  for (auto* p : params) {
    for (auto& v : p->value.values()) v += rng.uniform(-0.5, 0.5);
  }
}

Tensor<double> uniform_tensor(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

// Values bounded away from zero, so no ReLU switches inside the stencil.
Tensor<double> away_from_zero(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (auto& v : t.values()) {
    const double mag = rng.uniform(0.05, 1.0);
    v = rng.uniform() < 0.5 ? -mag : mag;
  }
  return t;
}

// Distinct values with gaps far wider than the difference step, so pooling
// argmaxes are stable.
Tensor<double> distinct_values(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  const std::size_t n = t.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  for (std::size_t i = 0; i < n; ++i) {
    t[order[i]] = -1.0 + 2.0 * (i + 0.5 + rng.uniform(-0.25, 0.25)) / n;
  }
  return t;
}

int pick(Rng& rng, std::initializer_list<int> options) {
  return *(options.begin() + rng.below(options.size()));
}

int range(Rng& rng, int lo, int hi) {
  return lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
}

struct LayerCase {
  LayerSpec spec;
  Tensor<double> input;
};

LayerCase make_case(LayerKind kind, Rng& rng) {
  switch (kind) {
    case LayerKind::kConv2D: {
      const int n = range(rng, 1, 2), cin = range(rng, 1, 3);
      const Shape s{n, cin, range(rng, 2, 8), range(rng, 2, 12)};
      return {LayerSpec::conv2d(range(rng, 1, 3), pick(rng, {1, 3, 7}), pick(rng, {1, 3, 5, 11})),
              uniform_tensor(s, rng)};
    }
    case LayerKind::kConv1D: {
      const Shape s{range(rng, 1, 2), range(rng, 1, 4), range(rng, 2, 12)};
      return {LayerSpec::conv1d(range(rng, 1, 4), pick(rng, {1, 3, 5})), uniform_tensor(s, rng)};
    }
    case LayerKind::kBatchNorm: {
      const int n = range(rng, 2, 4);
      Shape s;
      switch (rng.below(3)) {
        case 0: s = {n, range(rng, 1, 3), range(rng, 1, 4), range(rng, 1, 5)}; break;
        case 1: s = {n, range(rng, 1, 4), range(rng, 2, 6)}; break;
        default: s = {n, range(rng, 1, 8)}; break;
      }
      return {LayerSpec::batch_norm(), uniform_tensor(s, rng)};
    }
    case LayerKind::kReLU:
      return {LayerSpec::relu(), away_from_zero({2, range(rng, 1, 3), range(rng, 1, 8)}, rng)};
    case LayerKind::kMaxPool2D: {
      static const std::pair<int, int> windows[] = {{2, 10}, {2, 5}, {5, 10}, {2, 2}, {1, 3}};
      const auto [ph, pw] = windows[rng.below(5)];
      const Shape s{range(rng, 1, 2), range(rng, 1, 3), ph * range(rng, 1, 2) + range(rng, 0, ph - 1),
                    pw * range(rng, 1, 2) + range(rng, 0, pw - 1)};
      return {LayerSpec::max_pool2d(ph, pw), distinct_values(s, rng)};
    }
    case LayerKind::kDropout:
      return {LayerSpec::dropout(rng.uniform() < 0.5 ? 0.15 : 0.3),
              uniform_tensor({range(rng, 1, 3), range(rng, 1, 4), range(rng, 1, 8)}, rng)};
    case LayerKind::kGlobalAvgPool2D:
      return {LayerSpec::global_avg_pool2d(),
              uniform_tensor({range(rng, 1, 3), range(rng, 1, 4), range(rng, 1, 5), range(rng, 1, 5)}, rng)};
    case LayerKind::kDense:
      return {LayerSpec::dense(range(rng, 1, 10)),
              uniform_tensor({range(rng, 1, 3), range(rng, 1, 12)}, rng)};
    case LayerKind::kSoftmax:
      return {LayerSpec::softmax(), uniform_tensor({range(rng, 1, 3), range(rng, 2, 10)}, rng)};
    case LayerKind::kStatsPool:
      return {LayerSpec::stats_pool(),
              uniform_tensor({range(rng, 1, 3), range(rng, 1, 4), range(rng, 2, 12)}, rng)};
  }
  fail(ErrorCode::kInvalidArgument, "unknown layer kind");
}

std::vector<LayerSpec> toy_cnn2d() {
  return {LayerSpec::conv2d(3, 7, 11), LayerSpec::batch_norm(), LayerSpec::relu(),
          LayerSpec::max_pool2d(2, 10), LayerSpec::dropout(0.3),
          LayerSpec::conv2d(4, 7, 11), LayerSpec::batch_norm(), LayerSpec::relu(),
          LayerSpec::max_pool2d(2, 2), LayerSpec::dropout(0.3),
          LayerSpec::conv2d(5, 7, 11), LayerSpec::batch_norm(), LayerSpec::relu(),
          LayerSpec::max_pool2d(2, 0), LayerSpec::dropout(0.3),
          LayerSpec::global_avg_pool2d(), LayerSpec::batch_norm(),
          LayerSpec::dense(10), LayerSpec::softmax()};
}

std::vector<LayerSpec> toy_xvec1d() {
  std::vector<LayerSpec> s;
  for (int k : {3, 3, 5, 1}) {
    s.insert(s.end(), {LayerSpec::conv1d(5, k), LayerSpec::relu(), LayerSpec::batch_norm(),
                       LayerSpec::dropout(0.15)});
  }
  s.insert(s.end(), {LayerSpec::conv1d(7, 1), LayerSpec::relu(), LayerSpec::batch_norm(),
                     LayerSpec::stats_pool(), LayerSpec::dense(4), LayerSpec::relu(),
                     LayerSpec::batch_norm(), LayerSpec::dropout(0.15), LayerSpec::dense(4),
                     LayerSpec::relu(), LayerSpec::batch_norm(), LayerSpec::dense(10),
                     LayerSpec::softmax()});
  return s;
}

}  // namespace

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double scale = 0.0;
  for (double a : analytic) scale = std::max(scale, std::abs(a));
  const double floor = std::max(1e-3 * scale, 1e-12);
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

GradCheckReport grad_check(const LayerSpec& spec, const Tensor<double>& input,
                           std::uint64_t seed, double step) {
  Rng rng(seed);
  auto layer = make_layer<double>(spec, sample_shape(input.shape()), rng);
  randomize_parameters(layer->parameters(), rng);
  layer->forward(input, true);  // draws the dropout mask
  layer->set_mask_frozen(true);
  Subject subject{[&](const Tensor<double>& x) { return layer->forward(x, true); },
                  [&](const Tensor<double>& dy) { return layer->backward(dy); },
                  layer->parameters()};
  GradCheckReport report = check(subject, input, rng.next(), step, -1.0);
  report.label = layer->spec().describe();
  return report;
}

GradCheckReport grad_check_network(Network<double>& net, const Tensor<double>& input,
                                   std::uint64_t seed, double step, double kink_tolerance) {
  net.layer(0).set_input_grad_enabled(true);
  net.forward(input, true);
  net.freeze_dropout_masks(true);
  Tensor<double> dx;
  Subject subject{[&](const Tensor<double>& x) { return net.forward(x, true); },
                  [&](const Tensor<double>& dy) {
                    // Backward layer by layer so the input gradient is kept.
                    Tensor<double> g = dy;
                    for (std::size_t i = net.num_layers(); i-- > 0;) g = net.layer(i).backward(g);
                    return g;
                  },
                  net.parameters()};
  GradCheckReport report = check(subject, input, seed, step, kink_tolerance);
  net.freeze_dropout_masks(false);
  net.layer(0).set_input_grad_enabled(false);
  return report;
}

std::vector<GradSuiteRow> run_gradient_suite(int seeds, double tolerance) {
  const LayerKind kinds[] = {LayerKind::kConv2D,    LayerKind::kConv1D,
                             LayerKind::kBatchNorm, LayerKind::kReLU,
                             LayerKind::kMaxPool2D, LayerKind::kDropout,
                             LayerKind::kGlobalAvgPool2D, LayerKind::kDense,
                             LayerKind::kSoftmax,   LayerKind::kStatsPool};
  std::vector<GradSuiteRow> rows;
  for (LayerKind kind : kinds) {
    GradSuiteRow row;
    row.name = to_string(kind);
    for (int s = 0; s < seeds; ++s) {
      Rng rng(derive_seed(static_cast<std::uint64_t>(s), row.name));
      LayerCase c = make_case(kind, rng);
      const GradCheckReport r = grad_check(c.spec, c.input, rng.next());
      row.max_error = std::max(row.max_error, r.max_error());
      ++row.cases;
    }
    row.passed = row.max_error < tolerance;
    rows.push_back(row);
  }

  const int network_seeds = std::max(1, seeds / 5);
  const struct {
    const char* name;
    std::vector<LayerSpec> specs;
    Shape input;
  } nets[] = {{"CNN2D (toy)", toy_cnn2d(), {1, 8, 40}}, {"XVEC1D (toy)", toy_xvec1d(), {6, 10}}};
  for (const auto& n : nets) {
    GradSuiteRow row;
    row.name = n.name;
    for (int s = 0; s < network_seeds; ++s) {
      Rng rng(derive_seed(static_cast<std::uint64_t>(s), n.name));
      Network<double> net(n.input, n.specs, rng.next());
      randomize_parameters(net.parameters(), rng);
      const Tensor<double> x = uniform_tensor(batched(3, n.input), rng);
      const GradCheckReport r = grad_check_network(net, x, rng.next());
      row.max_error = std::max(row.max_error, r.max_error());
      row.skipped += r.skipped;
      ++row.cases;
    }
    row.passed = row.max_error < tolerance;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace scene_forge::nn
