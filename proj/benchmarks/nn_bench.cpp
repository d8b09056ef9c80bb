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

#include <benchmark/benchmark.h>

#include "scene_forge/models.hpp"
#include "scene_forge/nn/network.hpp"
#include "scene_forge/random.hpp"
#include "scene_forge/training.hpp"

namespace sf = scene_forge;
using sf::nn::LayerSpec;

namespace {

sf::nn::Tensor<float> random_tensor(sf::nn::Shape shape, std::uint64_t seed) {
  sf::Rng rng(seed);
  sf::nn::Tensor<float> t(std::move(shape));
  for (float& v : t.values()) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

// First CNN2D block convolution on one 80x500 map per sample.
void BM_Conv2dForward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  sf::nn::Network<float> net({1, 80, 500}, {LayerSpec::conv2d(32, 7, 11)}, 1);
  const auto x = random_tensor({batch, 1, 80, 500}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, true));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv2dForward)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  sf::nn::Network<float> net({1, 80, 500}, {LayerSpec::conv2d(32, 7, 11)}, 1);
  const auto x = random_tensor({batch, 1, 80, 500}, 2);
  const auto y = net.forward(x, true);
  const auto g = random_tensor(y.shape(), 3);
  for (auto _ : state) {
    net.forward(x, true);
    net.backward(g);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_Conv2dBackward)->Arg(8)->Unit(benchmark::kMillisecond);

// One optimizer step of each topology on 2 s synthetic-scale inputs.
void BM_TrainStep(benchmark::State& state) {
  const auto topology = static_cast<sf::Topology>(state.range(0));
  sf::Model model = sf::build_model(topology, 1, 80, 100, 4);
  const int batch = 16;
  const auto x = random_tensor(sf::nn::batched(batch, model.net.input_shape()), 5);
  std::vector<int> labels(batch);
  for (int i = 0; i < batch; ++i) labels[i] = i % sf::kNumScenes;
  for (auto _ : state) {
    model.net.zero_grad();
    benchmark::DoNotOptimize(sf::batch_loss(model.net, x, labels, true, true));
  }
  state.SetLabel(sf::to_string(topology));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Inference10s(benchmark::State& state) {
  const auto topology = static_cast<sf::Topology>(state.range(0));
  sf::Model model = sf::build_model(topology, 1, 80, 500, 6);
  const auto x = random_tensor(sf::nn::batched(1, model.net.input_shape()), 7);
  for (auto _ : state) benchmark::DoNotOptimize(model.net.forward(x, false));
  state.SetLabel(sf::to_string(topology));
}
BENCHMARK(BM_Inference10s)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
