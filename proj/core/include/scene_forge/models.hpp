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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scene_forge/features.hpp"
#include "scene_forge/nn/network.hpp"
#include "scene_forge/scenes.hpp"

namespace scene_forge {

enum class Topology : std::uint8_t { kCnn2d = 0, kXvec1d = 1 };

std::string to_string(Topology topology);
Topology parse_topology(const std::string& text);

using ScoreVector = std::array<double, kNumScenes>;

/// Layer stack of each topology. The CNN2D's last pool uses width 0, i.e.
/// it spans whatever time extent reaches it (10 frames for a 500-frame
/// input).
std::vector<nn::LayerSpec> topology_layers(Topology topology);

struct Model {
  Topology topology = Topology::kCnn2d;
  int input_channels = 1;
  int bands = 80;
  int frames = 500;
  nn::Network<float> net;
  std::optional<StandardizerStats> standardizer;

  /// Index of the dense layer whose pre-activation output is the x-vector.
  std::size_t xvector_layer() const;
};

/// Builds and shape-checks a model for a fixed frame count. XVEC1D accepts
/// single-channel input only.
Model build_model(Topology topology, int input_channels, int bands = 80, int frames = 500,
                  std::uint64_t seed = 0);

/// Per-sample network input: [channels, bands, frames] for CNN2D and
/// [bands, frames] for XVEC1D, standardized when the model carries stats.
nn::Tensor<float> to_network_input(const Model& model, const FeatureMap& map);

/// Inference-mode posteriors for a batch of samples shaped like
/// to_network_input() output.
std::vector<ScoreVector> predict_inputs(Model& model, std::span<const nn::Tensor<float>> inputs,
                                        int batch_size = 64);

ScoreVector predict(Model& model, const FeatureMap& map);
std::vector<ScoreVector> predict(Model& model, std::span<const FeatureMap> maps,
                                 int batch_size = 64);

std::vector<std::vector<double>> extract_xvectors_from_inputs(
    Model& model, std::span<const nn::Tensor<float>> inputs, int batch_size = 64);
std::vector<double> extract_xvector(Model& model, const FeatureMap& map);
std::vector<std::vector<double>> extract_xvectors(Model& model, std::span<const FeatureMap> maps,
                                                  int batch_size = 64);

/// "SNN1" checkpoint: version, model header, network descriptor and
/// values, optional standardizer.
void save_model(const std::filesystem::path& path, Model& model);
Model load_model(const std::filesystem::path& path);

}  // namespace scene_forge
