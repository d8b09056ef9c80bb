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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scene_forge/augment.hpp"
#include "scene_forge/backend.hpp"
#include "scene_forge/features.hpp"
#include "scene_forge/fusion.hpp"
#include "scene_forge/synthetic.hpp"
#include "scene_forge/training.hpp"

namespace scene_forge::cli {

/// One network to train in the pipeline, written "topology:kind:mode",
/// e.g. "cnn2d:mel:lrms".
struct NetworkSpec {
  Topology topology = Topology::kCnn2d;
  FeatureKind kind = FeatureKind::kMel;
  ChannelMode mode = ChannelMode::kMono;

  std::string name() const;  // "cnn2d-mel-lrms"
  static NetworkSpec parse(const std::string& text);
};

struct PipelineSettings {
  std::vector<NetworkSpec> networks;
  bool xvector_softmax = true;  // end-to-end softmax output of xvec1d nets
  bool xvector_cosine = true;   // x-vector + RLDA + cosine output
  bool augment = false;         // also train every network on augmented data
};

/// Every tunable of the pipeline. Defaults are the published constants.
struct Settings {
  FeatureConfig features;
  bool standardize = true;
  TrainConfig train;
  double valid_fraction = 0.3;
  AugmentConfig augment;
  RldaConfig rlda;
  double cosine_temperature = kDefaultCosineTemperature;
  LrFusionConfig fusion;
  SyntheticConfig synthetic;
  PipelineSettings pipeline;
  std::uint64_t seed = 0;
  int batch_inference = 64;

  Settings();
};

/// Sets one "section.key" from its text value; throws kConfig for unknown
/// keys and unparsable values.
void apply_setting(Settings& settings, const std::string& key, const std::string& value);

/// All recognised keys, in table order.
std::vector<std::string> setting_keys();

/// Defaults, then the INI file (sections and `key = value` lines), then
/// `overrides` given as "section.key=value".
Settings load_settings(const std::optional<std::filesystem::path>& file,
                       const std::vector<std::string>& overrides = {});

/// Resolved values as INI text.
std::string describe_settings(const Settings& settings);

}  // namespace scene_forge::cli
