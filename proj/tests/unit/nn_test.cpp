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

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "scene_forge/error.hpp"
#include "scene_forge/nn/adam.hpp"
#include "scene_forge/nn/checkpoint.hpp"
#include "scene_forge/nn/gradcheck.hpp"
#include "scene_forge/nn/network.hpp"

namespace scene_forge::nn {
namespace {

Tensor<double> random_tensor(const Shape& shape, Rng& rng) {
  Tensor<double> t(shape);
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

std::unique_ptr<Layer<double>> build(const LayerSpec& spec, const Shape& in, Rng& rng) {
  auto layer = make_layer<double>(spec, in, rng);
  for (auto* p : layer->parameters()) {
    for (auto& v : p->value.values()) v = rng.uniform(-1.0, 1.0);
  }
  return layer;
}

// Direct "same"-padded cross-correlation, [n, cin, h, w] -> [n, cout, h, w].
Tensor<double> conv2d_oracle(const Tensor<double>& x, const Tensor<double>& w,
                             const Tensor<double>& b) {
  const int n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const int pt = (kh - 1) / 2, pl = (kw - 1) / 2;
  Tensor<double> y({n, cout, h, wd});
  for (int s = 0; s < n; ++s)
    for (int o = 0; o < cout; ++o)
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < wd; ++j) {
          double acc = b[o];
          for (int c = 0; c < cin; ++c)
            for (int u = 0; u < kh; ++u)
              for (int v = 0; v < kw; ++v) {
                const int yi = i + u - pt, xj = j + v - pl;
                if (yi < 0 || yi >= h || xj < 0 || xj >= wd) continue;
                acc += w[((o * cin + c) * kh + u) * kw + v] *
                       x[((static_cast<std::size_t>(s) * cin + c) * h + yi) * wd + xj];
              }
          y[((static_cast<std::size_t>(s) * cout + o) * h + i) * wd + j] = acc;
        }
  return y;
}

struct ConvCase {
  int cin, h, w, cout, kh, kw;
};

class Conv2dOracle : public ::testing::TestWithParam<ConvCase> {};

TEST_P(Conv2dOracle, ForwardMatchesDirectLoops) {
  const ConvCase c = GetParam();
  Rng rng(static_cast<std::uint64_t>(c.h * 131 + c.kw));
  auto layer = build(LayerSpec::conv2d(c.cout, c.kh, c.kw), {c.cin, c.h, c.w}, rng);
  const auto params = layer->parameters();
  const Tensor<double> x = random_tensor({2, c.cin, c.h, c.w}, rng);
  const Tensor<double> y = layer->forward(x, true);
  const Tensor<double> ref = conv2d_oracle(x, params[0]->value, params[1]->value);
  ASSERT_EQ(y.shape(), ref.shape());
  for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-12);
}

INSTANTIATE_TEST_SUITE_P(
    Shapes, Conv2dOracle,
    ::testing::Values(ConvCase{1, 8, 20, 3, 7, 11}, ConvCase{2, 5, 6, 4, 3, 3},
                      // Kernel taller and wider than the map: only a window of taps is live.
                      ConvCase{3, 4, 2, 2, 7, 11}, ConvCase{2, 1, 1, 3, 7, 11},
                      ConvCase{1, 3, 9, 2, 1, 5}));

TEST(Layers, Conv1dMatchesDirectLoops) {
  Rng rng(3);
  const int cin = 3, t = 9, cout = 4, k = 5;
  auto layer = build(LayerSpec::conv1d(cout, k), {cin, t}, rng);
  const auto params = layer->parameters();
  const Tensor<double> x = random_tensor({2, cin, t}, rng);
  const Tensor<double> y = layer->forward(x, true);
  ASSERT_EQ(y.shape(), (Shape{2, cout, t}));
  for (int s = 0; s < 2; ++s)
    for (int o = 0; o < cout; ++o)
      for (int i = 0; i < t; ++i) {
        double acc = params[1]->value[o];
        for (int c = 0; c < cin; ++c)
          for (int v = 0; v < k; ++v) {
            const int j = i + v - (k - 1) / 2;
            if (j >= 0 && j < t) acc += params[0]->value[(o * cin + c) * k + v] * x[(s * cin + c) * t + j];
          }
        ASSERT_NEAR(y[(s * cout + o) * t + i], acc, 1e-12);
      }
}

TEST(Layers, MaxPoolDenseSoftmaxGapStats) {
  Rng rng(4);
  auto pool = make_layer<double>(LayerSpec::max_pool2d(2, 3), {2, 4, 7}, rng);
  const Tensor<double> x = random_tensor({1, 2, 4, 7}, rng);
  const Tensor<double> y = pool->forward(x, true);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 2, 2}));  // trailing column dropped
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double m = -1e300;
        for (int u = 0; u < 2; ++u)
          for (int v = 0; v < 3; ++v) m = std::max(m, x[(c * 4 + 2 * i + u) * 7 + 3 * j + v]);
        EXPECT_EQ(y[(c * 2 + i) * 2 + j], m);
      }

  auto whole = make_layer<double>(LayerSpec::max_pool2d(2, 0), {1, 4, 7}, rng);
  EXPECT_EQ(whole->output_shape(), (Shape{1, 2, 1}));

  auto dense = build(LayerSpec::dense(3), {5}, rng);
  const auto dp = dense->parameters();
  const Tensor<double> dx = random_tensor({2, 5}, rng);
  const Tensor<double> dy = dense->forward(dx, true);
  for (int s = 0; s < 2; ++s)
    for (int o = 0; o < 3; ++o) {
      double acc = dp[1]->value[o];
      for (int i = 0; i < 5; ++i) acc += dp[0]->value[o * 5 + i] * dx[s * 5 + i];
      EXPECT_NEAR(dy[s * 3 + o], acc, 1e-12);
    }

  auto sm = make_layer<double>(LayerSpec::softmax(), {4}, rng);
  const Tensor<double> logits({1, 4}, std::vector<double>{1000.0, 1001.0, 999.0, -5.0});
  const Tensor<double> p = sm->forward(logits, false);
  const double z = std::exp(-1.0) + 1.0 + std::exp(-2.0) + std::exp(-1006.0);
  EXPECT_NEAR(p[1], 1.0 / z, 1e-15);
  EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 1.0, 1e-15);

  auto gap = make_layer<double>(LayerSpec::global_avg_pool2d(), {2, 3, 4}, rng);
  const Tensor<double> gx = random_tensor({1, 2, 3, 4}, rng);
  const Tensor<double> gy = gap->forward(gx, true);
  for (int c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (int i = 0; i < 12; ++i) sum += gx[c * 12 + i];
    EXPECT_NEAR(gy[c], sum / 12.0, 1e-15);
  }

  auto stats = make_layer<double>(LayerSpec::stats_pool(), {3, 6}, rng);
  const Tensor<double> sx = random_tensor({2, 3, 6}, rng);
  const Tensor<double> sy = stats->forward(sx, true);
  ASSERT_EQ(sy.shape(), (Shape{2, 6}));
  for (int s = 0; s < 2; ++s)
    for (int c = 0; c < 3; ++c) {
      double mean = 0.0, sq = 0.0;
      for (int t = 0; t < 6; ++t) mean += sx[(s * 3 + c) * 6 + t] / 6.0;
      for (int t = 0; t < 6; ++t) sq += std::pow(sx[(s * 3 + c) * 6 + t] - mean, 2) / 6.0;
      EXPECT_NEAR(sy[s * 6 + c], mean, 1e-14);
      EXPECT_NEAR(sy[s * 6 + 3 + c], std::sqrt(sq + kStatsPoolVarianceFloor), 1e-14);
    }
}

TEST(Layers, BatchNormTrainingAndInference) {
  Rng rng(6);
  auto bn = make_layer<double>(LayerSpec::batch_norm(), {2, 3}, rng);
  const Tensor<double> x = random_tensor({4, 2, 3}, rng);
  const Tensor<double> y = bn->forward(x, true);
  for (int f = 0; f < 2; ++f) {
    double mean = 0.0, var = 0.0;
    for (int s = 0; s < 4; ++s)
      for (int t = 0; t < 3; ++t) mean += x[(s * 2 + f) * 3 + t] / 12.0;
    for (int s = 0; s < 4; ++s)
      for (int t = 0; t < 3; ++t) var += std::pow(x[(s * 2 + f) * 3 + t] - mean, 2) / 12.0;
    for (int s = 0; s < 4; ++s)
      for (int t = 0; t < 3; ++t) {
        const std::size_t i = (s * 2 + f) * 3 + t;
        EXPECT_NEAR(y[i], (x[i] - mean) / std::sqrt(var + kBatchNormEpsilon), 1e-12);
      }
    const auto buffers = bn->buffers();
    EXPECT_NEAR((*buffers[0])[f], (1 - kBatchNormMomentum) * mean, 1e-14);
    EXPECT_NEAR((*buffers[1])[f], kBatchNormMomentum + (1 - kBatchNormMomentum) * var, 1e-14);
  }
  const Tensor<double> single = random_tensor({1, 2, 3}, rng);
  EXPECT_NO_THROW(bn->forward(single, false));
  EXPECT_THROW(bn->forward(single, true), Error);
}

TEST(Layers, DropoutScalesKeptUnitsAndIsIdentityAtInference) {
  Rng rng(7);
  auto drop = make_layer<double>(LayerSpec::dropout(0.3), {1000}, rng);
  const Tensor<double> x({1, 1000}, 1.0);
  const Tensor<double> y = drop->forward(x, true);
  int kept = 0;
  for (double v : y.values()) {
    if (v != 0.0) {
      EXPECT_NEAR(v, 1.0 / 0.7, 1e-15);
      ++kept;
    }
  }
  EXPECT_NEAR(kept / 1000.0, 0.7, 0.05);
  EXPECT_EQ(drop->forward(x, false), x);
}

TEST(Layers, ShapeErrors) {
  Rng rng(8);
  EXPECT_THROW(make_layer<double>(LayerSpec::conv2d(2, 3, 3), {4, 5}, rng), Error);
  EXPECT_THROW(make_layer<double>(LayerSpec::max_pool2d(3, 3), {1, 2, 9}, rng), Error);
  EXPECT_THROW(make_layer<double>(LayerSpec::stats_pool(), {4, 1}, rng), Error);
  auto dense = make_layer<double>(LayerSpec::dense(3), {5}, rng);
  EXPECT_THROW(dense->forward(Tensor<double>({2, 4}), true), Error);
}

TEST(GradCheck, EveryLayerKindOnRandomShapes) {
  // Reduced version of the full suite that the `gradcheck` command runs.
  for (const auto& row : run_gradient_suite(10, 1e-4)) {
    EXPECT_TRUE(row.passed) << row.name << " max error " << row.max_error;
    EXPECT_GT(row.cases, 0);
  }
}

TEST(GradCheck, DetectsAWrongGradient) {
  const std::vector<double> analytic = {1.0, 2.0, 3.0};
  const std::vector<double> numeric = {1.0, 2.0, 3.3};
  EXPECT_NEAR(max_relative_error(analytic, numeric), 0.3 / 3.3, 1e-12);
  const std::vector<double> zeros = {0.0, 0.0};
  EXPECT_EQ(max_relative_error(zeros, zeros), 0.0);
}

TEST(Adam, StepMatchesClosedForm) {
  Parameter<double> p{"w", Tensor<double>({2}, std::vector<double>{1.0, -2.0}),
                      Tensor<double>({2}, std::vector<double>{0.5, -0.1})};
  std::vector<Parameter<double>*> params = {&p};
  AdamState<double> state;
  const double lr = 0.01;
  ASSERT_TRUE(adam_step<double>(params, state, lr));
  // First step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  EXPECT_NEAR(p.value[0], 1.0 - lr * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(p.value[1], -2.0 + lr * 0.1 / (0.1 + 1e-8), 1e-15);
  // Second step with the same gradient.
  ASSERT_TRUE(adam_step<double>(params, state, lr));
  const double m = (0.9 * 0.1 * 0.5 + 0.1 * 0.5) / (1 - 0.81);
  const double v = (0.999 * 0.001 * 0.25 + 0.001 * 0.25) / (1 - 0.999 * 0.999);
  EXPECT_NEAR(p.value[0], 1.0 - lr * 0.5 / (0.5 + 1e-8) - lr * m / (std::sqrt(v) + 1e-8), 1e-14);
  EXPECT_EQ(state.step, 2);

  const Tensor<double> before = p.value;
  p.grad[1] = std::nan("");
  EXPECT_FALSE(adam_step<double>(params, state, lr));
  EXPECT_EQ(p.value, before);
  EXPECT_EQ(state.step, 2);
}

TEST(Network, ShapeTraceSnapshotAndCheckpoint) {
  const std::vector<LayerSpec> specs = {LayerSpec::conv2d(3, 3, 3), LayerSpec::batch_norm(),
                                        LayerSpec::relu(),         LayerSpec::max_pool2d(2, 0),
                                        LayerSpec::global_avg_pool2d(), LayerSpec::dense(4),
                                        LayerSpec::softmax()};
  Network<float> net({1, 4, 6}, specs, 11);
  const auto trace = net.shape_trace();
  ASSERT_EQ(trace.size(), specs.size() + 1);
  EXPECT_EQ(trace[4], (Shape{3, 2, 1}));
  EXPECT_EQ(net.output_shape(), (Shape{4}));
  EXPECT_EQ(net.resolved_specs()[3].pool_w, 6);
  EXPECT_EQ(net.logits_end(), specs.size() - 1);

  Rng rng(2);
  Tensor<float> x({3, 1, 4, 6});
  for (auto& v : x.values()) v = static_cast<float>(rng.uniform(-1, 1));
  net.forward(x, true);  // moves batch-norm running statistics
  const auto state = net.snapshot();
  const Tensor<float> y = net.forward(x, false);

  std::stringstream buf;
  write_network(buf, net);
  Network<float> copy = read_network(buf);
  EXPECT_EQ(copy.forward(x, false), y);
  EXPECT_EQ(copy.resolved_specs(), net.resolved_specs());

  for (auto* p : net.parameters()) p->value.fill(0.5f);
  EXPECT_NE(net.forward(x, false), y);
  net.restore(state);
  EXPECT_EQ(net.forward(x, false), y);

  std::stringstream bad("not a network");
  EXPECT_THROW(read_network(bad), Error);
}

}  // namespace
}  // namespace scene_forge::nn
