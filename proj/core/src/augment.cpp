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

#include "scene_forge/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "scene_forge/error.hpp"
#include "scene_forge/parallel.hpp"
#include "scene_forge/random.hpp"
#include "scene_forge/scenes.hpp"

namespace scene_forge {

AudioClip mix_clips(const AudioClip& primary, std::span<const AudioClip> others,
                    std::span<const double> weights) {
  if (weights.size() != others.size() + 1) {
    fail(ErrorCode::kInvalidArgument, "need one weight per clip");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(ErrorCode::kInvalidArgument, "weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::kInvalidArgument, "weights must sum to 1");
  }
  for (const auto& o : others) {
    if (o.num_samples() != primary.num_samples() ||
        o.sample_rate != primary.sample_rate) {
      fail(ErrorCode::kShapeMismatch, "mixed clips differ in length or sample rate");
    }
  }
  AudioClip out;
  out.sample_rate = primary.sample_rate;
  out.left.resize(primary.num_samples());
  out.right.resize(primary.num_samples());
  double peak = 0.0;
  for (std::size_t i = 0; i < primary.num_samples(); ++i) {
    double l = weights[0] * primary.left[i];
    double r = weights[0] * primary.right[i];
    for (std::size_t k = 0; k < others.size(); ++k) {
      l += weights[k + 1] * others[k].left[i];
      r += weights[k + 1] * others[k].right[i];
    }
    out.left[i] = l;
    out.right[i] = r;
    peak = std::max({peak, std::abs(l), std::abs(r)});
  }
  if (peak > 1.0) {
    const double gain = 0.95 / peak;
    for (auto* ch : {&out.left, &out.right})
      for (double& v : *ch) v *= gain;
  }
  return out;
}

std::vector<MixRecipe> plan_augmentation(const DatasetManifest& train,
                                         const AugmentConfig& config) {
  if (config.min_partners < 1 || config.max_partners < config.min_partners) {
    fail(ErrorCode::kInvalidArgument, "bad partner range");
  }
  if (!(config.primary_weight_min >= 0.0 &&
        config.primary_weight_min < config.primary_weight_max &&
        config.primary_weight_max <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "bad primary weight range");
  }
  std::array<std::vector<std::size_t>, kNumScenes> by_class;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train[i].split != Split::kTrain) {
      fail(ErrorCode::kInvalidArgument,
           "only train-split segments may be augmented ('" + train[i].segment_id +
               "' is " + to_string(train[i].split) + ")");
    }
    by_class[train[i].scene].push_back(i);
  }
  for (int c = 0; c < kNumScenes; ++c) {
    const auto n = by_class[c].size();
    if (n > 0 && n < static_cast<std::size_t>(config.max_partners) + 1) {
      fail(ErrorCode::kClassTooSmall,
           "scene '" + std::string(kSceneLabels[c]) + "' has " + std::to_string(n) +
               " segments, mixing needs " + std::to_string(config.max_partners + 1));
    }
  }

  std::vector<MixRecipe> plan;
  plan.reserve(train.size() * config.clips_per_segment);
  for (std::size_t i = 0; i < train.size(); ++i) {
    const ManifestEntry& entry = train[i];
    Rng rng(derive_seed(config.seed, entry.segment_id));
    std::vector<std::size_t> pool;
    for (std::size_t j : by_class[entry.scene])
      if (j != i) pool.push_back(j);
    for (int n = 0; n < config.clips_per_segment; ++n) {
      MixRecipe r;
      r.segment_id = entry.segment_id + "_aug" + std::to_string(n);
      r.primary = i;
      const auto span = static_cast<std::uint64_t>(config.max_partners - config.min_partners + 1);
      const auto k = static_cast<std::size_t>(config.min_partners) + rng.below(span);
      // Partial Fisher-Yates: the first k slots become a uniform k-subset.
      for (std::size_t s = 0; s < k; ++s) {
        std::swap(pool[s], pool[s + rng.below(pool.size() - s)]);
        r.partners.push_back(pool[s]);
      }
      const double w0 = rng.uniform(config.primary_weight_min, config.primary_weight_max);
      std::vector<double> shares(k);
      double share_sum = 0.0;
      for (double& s : shares) {
        s = 1.0 - rng.uniform();  // (0, 1]
        share_sum += s;
      }
      r.weights.push_back(w0);
      for (double s : shares) r.weights.push_back((1.0 - w0) * s / share_sum);
      plan.push_back(std::move(r));
    }
  }
  return plan;
}

DatasetManifest augment_dataset(const DatasetManifest& train,
                                const AugmentConfig& config,
                                const std::filesystem::path& out_dir) {
  const std::vector<MixRecipe> plan = plan_augmentation(train, config);
  std::filesystem::create_directories(out_dir);
  std::vector<ManifestEntry> entries = train.entries();
  const std::size_t first_new = entries.size();
  entries.resize(first_new + plan.size());

  parallel_for(plan.size(), config.jobs, [&](std::size_t p) {
    const MixRecipe& r = plan[p];
    const AudioClip primary = read_wav(train[r.primary].audio_path);
    std::vector<AudioClip> partners;
    for (std::size_t j : r.partners) partners.push_back(read_wav(train[j].audio_path));
    const AudioClip mixed = mix_clips(primary, partners, r.weights);
    ManifestEntry e;
    e.segment_id = r.segment_id;
    e.audio_path = out_dir / (r.segment_id + ".wav");
    e.scene = train[r.primary].scene;
    e.split = Split::kTrain;
    e.provenance = Provenance::kAugmented;
    write_wav(e.audio_path, mixed, config.encoding);
    entries[first_new + p] = std::move(e);
  });
  return DatasetManifest(std::move(entries));
}

}  // namespace scene_forge
