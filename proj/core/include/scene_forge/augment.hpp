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
#include <span>
#include <string>
#include <vector>

#include "scene_forge/audio_io.hpp"

namespace scene_forge {

/// Convex combination of equal-length clips, weights[0] for the primary.
/// The mix is rescaled to a 0.95 peak if any sample exceeds full scale.
AudioClip mix_clips(const AudioClip& primary, std::span<const AudioClip> others,
                    std::span<const double> weights);

struct AugmentConfig {
  int clips_per_segment = 2;
  int min_partners = 1;
  int max_partners = 3;
  double primary_weight_min = 0.5;
  double primary_weight_max = 0.9;
  std::uint64_t seed = 0;
  WavEncoding encoding = WavEncoding::kPcm16;
  int jobs = 1;
};

/// One augmented segment: which sources are mixed and with what weights.
struct MixRecipe {
  std::string segment_id;
  std::size_t primary = 0;              // index into the source manifest
  std::vector<std::size_t> partners;    // same-scene indices, distinct
  std::vector<double> weights;          // primary first
};

/// Deterministic mixing plan. Each segment draws from its own stream seeded
/// by (seed, segment_id), so the plan does not depend on processing order.
std::vector<MixRecipe> plan_augmentation(const DatasetManifest& train,
                                         const AugmentConfig& config);

/// Writes one WAV per recipe into out_dir and returns the original entries
/// followed by the augmented ones (3x the input for the default config).
/// Only train-split manifests are accepted.
DatasetManifest augment_dataset(const DatasetManifest& train,
                                const AugmentConfig& config,
                                const std::filesystem::path& out_dir);

}  // namespace scene_forge
