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

#include <set>

#include "scene_forge/augment.hpp"
#include "scene_forge/scenes.hpp"
#include "scene_forge/error.hpp"
#include "test_support.hpp"

namespace scene_forge {
namespace {

using testing::TempDir;

TEST(Mix, IdentityAndIdempotence) {
  const AudioClip a = testing::random_clip(500, 16000, 1);
  const std::vector<double> one = {1.0};
  const AudioClip same = mix_clips(a, {}, one);
  EXPECT_EQ(same.left, a.left);
  EXPECT_EQ(same.right, a.right);

  const std::vector<AudioClip> twin = {a};
  const std::vector<double> half = {0.5, 0.5};
  const AudioClip mixed = mix_clips(a, twin, half);
  EXPECT_EQ(mixed.left, a.left);
  EXPECT_EQ(mixed.right, a.right);
}

TEST(Mix, MatchesLoopOracle) {
  const AudioClip a = testing::random_clip(1000, 16000, 2);
  const std::vector<AudioClip> others = {testing::random_clip(1000, 16000, 3),
                                         testing::random_clip(1000, 16000, 4)};
  const std::vector<double> w = {0.6, 0.3, 0.1};
  const AudioClip m = mix_clips(a, others, w);
  for (std::size_t i = 0; i < 1000; ++i) {
    const double l = w[0] * a.left[i] + w[1] * others[0].left[i] + w[2] * others[1].left[i];
    const double r = w[0] * a.right[i] + w[1] * others[0].right[i] + w[2] * others[1].right[i];
    ASSERT_NEAR(m.left[i], l, 1e-12);
    ASSERT_NEAR(m.right[i], r, 1e-12);
  }
}

TEST(Mix, PeakRenormalizesInsteadOfClamping) {
  AudioClip a = testing::random_clip(100, 16000, 5, 0.2);
  AudioClip b = a;
  a.left[10] = 1.0;
  b.left[10] = 1.4;  // mix reaches 1.2 here
  const std::vector<AudioClip> others = {b};
  const std::vector<double> w = {0.5, 0.5};
  const AudioClip m = mix_clips(a, others, w);
  const double gain = 0.95 / 1.2;
  EXPECT_NEAR(m.left[10], 0.95, 1e-12);
  for (std::size_t i = 0; i < 100; ++i) {
    if (i != 10) {
      ASSERT_NEAR(m.left[i], gain * a.left[i], 1e-12);
    }
    ASSERT_NEAR(m.right[i], gain * a.right[i], 1e-12);
  }
}

TEST(Mix, RejectsBadInputs) {
  const AudioClip a = testing::random_clip(100, 16000, 1);
  const std::vector<AudioClip> shorter = {testing::random_clip(99, 16000, 2)};
  const std::vector<double> w = {0.5, 0.5};
  EXPECT_THROW(mix_clips(a, shorter, w), Error);
  const std::vector<AudioClip> ok = {a};
  const std::vector<double> bad_sum = {0.5, 0.6};
  EXPECT_THROW(mix_clips(a, ok, bad_sum), Error);
  const std::vector<double> negative = {1.2, -0.2};
  EXPECT_THROW(mix_clips(a, ok, negative), Error);
}

DatasetManifest write_train_set(const std::filesystem::path& dir, int per_class) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> entries;
  for (int c = 0; c < kNumScenes; ++c) {
    for (int i = 0; i < per_class; ++i) {
      ManifestEntry e;
      e.segment_id = std::string(kSceneLabels[c]) + "-" + std::to_string(i);
      e.audio_path = dir / (e.segment_id + ".wav");
      e.scene = c;
      write_wav(e.audio_path, testing::random_clip(800, 8000, 100 * c + i, 0.4));
      entries.push_back(e);
    }
  }
  return DatasetManifest(entries);
}

TEST(Plan, SameScenePartnersAndWeightRanges) {
  TempDir dir("plan");
  const DatasetManifest train = write_train_set(dir.path(), 6);
  AugmentConfig cfg;
  cfg.seed = 9;
  const auto plan = plan_augmentation(train, cfg);
  ASSERT_EQ(plan.size(), 2 * train.size());
  for (const MixRecipe& r : plan) {
    ASSERT_GE(r.partners.size(), 1u);
    ASSERT_LE(r.partners.size(), 3u);
    const std::set<std::size_t> distinct(r.partners.begin(), r.partners.end());
    EXPECT_EQ(distinct.size(), r.partners.size());
    EXPECT_FALSE(distinct.count(r.primary));
    for (std::size_t p : r.partners) EXPECT_EQ(train[p].scene, train[r.primary].scene);
    ASSERT_EQ(r.weights.size(), r.partners.size() + 1);
    EXPECT_GE(r.weights[0], 0.5);
    EXPECT_LT(r.weights[0], 0.9);
    double sum = 0.0;
    for (double w : r.weights) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
  // Each segment's stream depends only on (seed, segment_id): dropping
  // other classes leaves its recipes unchanged.
  std::vector<ManifestEntry> subset;
  for (const auto& e : train.entries()) {
    if (e.scene == 3) subset.push_back(e);
  }
  const auto sub_plan = plan_augmentation(DatasetManifest(subset), cfg);
  const auto offset = static_cast<std::size_t>(3 * 6);
  for (std::size_t i = 0; i < sub_plan.size(); ++i) {
    EXPECT_EQ(sub_plan[i].weights, plan[2 * offset + i].weights);
  }
}

TEST(Plan, RejectsNonTrainAndTinyClasses) {
  TempDir dir("plan");
  const DatasetManifest train = write_train_set(dir.path(), 4);
  std::vector<ManifestEntry> entries = train.entries();
  entries[0].split = Split::kEval;
  EXPECT_THROW(plan_augmentation(DatasetManifest(entries), {}), Error);
  const DatasetManifest tiny = write_train_set(dir.path(), 3);
  EXPECT_THROW(plan_augmentation(tiny, {}), Error);
}

TEST(Augment, TripleSizeSameSceneAndByteDeterministic) {
  TempDir dir("augment");
  const DatasetManifest train = write_train_set(dir / "src", 5);
  AugmentConfig cfg;
  cfg.seed = 3;
  const DatasetManifest a = augment_dataset(train, cfg, dir / "a");
  cfg.jobs = 3;
  const DatasetManifest b = augment_dataset(train, cfg, dir / "b");
  ASSERT_EQ(a.size(), 3 * train.size());
  ASSERT_EQ(b.size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].segment_id, b[i].segment_id);
    EXPECT_EQ(a[i].provenance, i < train.size() ? Provenance::kOriginal : Provenance::kAugmented);
    if (i >= train.size()) {
      EXPECT_EQ(testing::read_bytes(a[i].audio_path), testing::read_bytes(b[i].audio_path));
    }
  }
  save_manifest(dir / "a" / "manifest.tsv", a);
  save_manifest(dir / "b" / "manifest.tsv", b);
  EXPECT_EQ(testing::read_bytes(dir / "a" / "manifest.tsv"),
            testing::read_bytes(dir / "b" / "manifest.tsv"));
}

}  // namespace
}  // namespace scene_forge
