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

#include "scene_forge/audio_io.hpp"

namespace scene_forge {

/// Labelled synthetic scene corpus. Classes come in five groups that differ
/// in the centre of a broad noise band; the two classes within a group
/// differ by two independent cues, each of which is missing from some clips:
/// the pitch of a low tone comb (resolved by constant-Q bands, blurred by
/// mel bands) and the position of a high noise band (above the constant-Q
/// range, visible to mel bands).
struct SyntheticConfig {
  int clips_per_class = 100;
  double duration_s = 2.0;
  int sample_rate = 16000;
  std::uint64_t seed = 0;
  /// Probability that a clip lacks the low tone-comb cue.
  double tone_dropout = 0.15;
  /// Probability that a clip lacks the high-band cue.
  double band_dropout = 0.15;
  /// Level of the background noise relative to the group noise band, dB.
  double background_db = -6.0;
  /// Per-clip random detuning of the tone comb, semitones (uniform +-).
  double pitch_jitter = 0.3;
  /// Fractions of each class assigned to the valid and eval splits.
  double valid_fraction = 0.2;
  double eval_fraction = 0.3;
  int jobs = 1;
};

/// Deterministic stereo clip for class `scene`, instance `index`.
AudioClip synthesize_clip(int scene, int index, const SyntheticConfig& config);

/// Writes `<label>_<index>.wav` files under out_dir and a manifest.tsv with
/// per-class train/valid/eval splits; returns the manifest.
DatasetManifest make_synthetic_corpus(const SyntheticConfig& config,
                                      const std::filesystem::path& out_dir);

}  // namespace scene_forge
