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
#include <functional>

#include "scene_forge/audio_io.hpp"
#include "scene_forge/scenes.hpp"
#include "scene_forge/error.hpp"
#include "test_support.hpp"

namespace scene_forge {
namespace {

using testing::TempDir;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Wav, SilenceReadsAsZeros) {
  TempDir dir("wav");
  const std::vector<std::int16_t> zeros(2 * 48000, 0);
  testing::write_bytes(dir / "silence.wav",
                       testing::wav_bytes(2, 48000, 16, 1, testing::pcm16_payload(zeros)));
  const AudioClip clip = read_wav(dir / "silence.wav");
  EXPECT_EQ(clip.sample_rate, 48000);
  ASSERT_EQ(clip.num_samples(), 48000u);
  for (std::size_t i = 0; i < clip.num_samples(); ++i) {
    ASSERT_EQ(clip.left[i], 0.0);
    ASSERT_EQ(clip.right[i], 0.0);
  }
}

TEST(Wav, Pcm16ScalesByInverseFullScale) {
  TempDir dir("wav");
  const std::vector<std::int16_t> samples = {-32768, 32767, 16384, -1, 1, 0};
  testing::write_bytes(dir / "s.wav",
                       testing::wav_bytes(2, 16000, 16, 1, testing::pcm16_payload(samples)));
  const AudioClip clip = read_wav(dir / "s.wav");
  ASSERT_EQ(clip.num_samples(), 3u);
  EXPECT_EQ(clip.left[0], -1.0);
  EXPECT_EQ(clip.right[0], 32767.0 / 32768.0);
  EXPECT_EQ(clip.left[1], 0.5);
  EXPECT_EQ(clip.right[1], -1.0 / 32768.0);
  EXPECT_EQ(clip.left[2], 1.0 / 32768.0);
}

TEST(Wav, MonoIsDuplicated) {
  TempDir dir("wav");
  testing::write_bytes(dir / "m.wav",
                       testing::wav_bytes(1, 8000, 16, 1, testing::pcm16_payload({100, -200, 300})));
  const AudioClip clip = read_wav(dir / "m.wav");
  EXPECT_EQ(clip.left, clip.right);
  EXPECT_EQ(clip.left[1], -200.0 / 32768.0);
}

TEST(Wav, LibraryEncoderMatchesIndependentEncoder) {
  TempDir dir("wav");
  const AudioClip clip = testing::random_clip(4800, 48000, 7);
  write_wav(dir / "lib.wav", clip);
  std::vector<std::int16_t> pcm;
  for (std::size_t i = 0; i < clip.num_samples(); ++i) {
    for (double v : {clip.left[i], clip.right[i]}) {
      pcm.push_back(static_cast<std::int16_t>(std::lround(v * 32768.0)));
    }
  }
  EXPECT_EQ(testing::read_bytes(dir / "lib.wav"),
            testing::wav_bytes(2, 48000, 16, 1, testing::pcm16_payload(pcm)));
}

TEST(Wav, RoundTripWithinOneStep) {
  TempDir dir("wav");
  const AudioClip clip = testing::random_clip(4800, 48000, 11, 0.9);
  write_wav(dir / "rt.wav", clip);
  const AudioClip back = read_wav(dir / "rt.wav");
  ASSERT_EQ(back.num_samples(), clip.num_samples());
  for (std::size_t i = 0; i < clip.num_samples(); ++i) {
    ASSERT_LE(std::abs(back.left[i] - clip.left[i]), 1.0 / 32768.0);
    ASSERT_LE(std::abs(back.right[i] - clip.right[i]), 1.0 / 32768.0);
  }
}

TEST(Wav, Float32RoundTripIsExactForFloatValues) {
  TempDir dir("wav");
  AudioClip clip = testing::random_clip(1000, 22050, 3);
  for (auto* ch : {&clip.left, &clip.right}) {
    for (double& v : *ch) v = static_cast<float>(v);
  }
  write_wav(dir / "f.wav", clip, WavEncoding::kFloat32);
  const AudioClip back = read_wav(dir / "f.wav");
  EXPECT_EQ(back.left, clip.left);
  EXPECT_EQ(back.right, clip.right);
}

TEST(Wav, ErrorClasses) {
  TempDir dir("wav");
  testing::write_bytes(dir / "junk.wav", "not a wave file at all, just text padding");
  EXPECT_EQ(code_of([&] { read_wav(dir / "junk.wav"); }), ErrorCode::kMalformedHeader);

  testing::write_bytes(dir / "pcm24.wav", testing::wav_bytes(2, 8000, 24, 1, std::string(12, '\0')));
  EXPECT_EQ(code_of([&] { read_wav(dir / "pcm24.wav"); }), ErrorCode::kUnsupportedEncoding);

  std::string truncated = testing::wav_bytes(2, 8000, 16, 1, testing::pcm16_payload({1, 2, 3, 4}));
  truncated.resize(truncated.size() - 3);
  testing::write_bytes(dir / "short.wav", truncated);
  EXPECT_EQ(code_of([&] { read_wav(dir / "short.wav"); }), ErrorCode::kTruncatedData);

  EXPECT_EQ(code_of([&] { read_wav(dir / "missing.wav"); }), ErrorCode::kIo);
}

TEST(Channels, ZeroMeanRemovesOffsetPerChannel) {
  AudioClip clip = testing::random_clip(10000, 16000, 5);
  for (double& v : clip.left) v += 0.25;
  for (double& v : clip.right) v -= 0.1;
  const AudioClip z = zero_mean(clip);
  for (const auto* ch : {&z.left, &z.right}) {
    double mean = 0.0;
    for (double v : *ch) mean += v;
    EXPECT_LT(std::abs(mean / static_cast<double>(ch->size())), 1e-9);
  }
  EXPECT_THROW(zero_mean(AudioClip{}), Error);
}

TEST(Channels, DeriveMonoAndLrms) {
  const AudioClip clip = testing::random_clip(2000, 16000, 9);
  const ChannelSet m = derive_channels(clip, ChannelMode::kMono);
  ASSERT_EQ(m.signals.size(), 1u);
  const ChannelSet lrms = derive_channels(clip, ChannelMode::kLrms);
  ASSERT_EQ(lrms.signals.size(), 4u);
  for (std::size_t i = 0; i < clip.num_samples(); ++i) {
    EXPECT_EQ(m.signals[0][i], 0.5 * (clip.left[i] + clip.right[i]));
    EXPECT_EQ(lrms.signals[0][i], clip.left[i]);
    EXPECT_EQ(lrms.signals[1][i], clip.right[i]);
    EXPECT_EQ(lrms.signals[2][i] - lrms.signals[0][i] - lrms.signals[1][i], 0.0);
    EXPECT_EQ(lrms.signals[3][i], clip.left[i] - clip.right[i]);
  }
}

TEST(Manifest, LoadSaveRoundTripAndRelativePaths) {
  TempDir dir("manifest");
  std::filesystem::create_directories(dir / "audio");
  {
    std::ofstream out(dir / "meta.tsv");
    out << "filename\tscene_label\tidentifier\n"
        << "audio/a-1.wav\tairport\tbarcelona-0\n"
        << "audio/b-2.wav\ttram\tlisbon-1\n";
  }
  const DatasetManifest dcase = load_manifest(dir / "meta.tsv");
  ASSERT_EQ(dcase.size(), 2u);
  EXPECT_EQ(dcase[0].segment_id, "a-1");
  EXPECT_EQ(dcase[1].scene, 9);
  EXPECT_EQ(dcase[0].split, Split::kTrain);
  EXPECT_EQ(dcase[0].audio_path, (dir / "audio/a-1.wav").lexically_normal());

  std::vector<ManifestEntry> entries = dcase.entries();
  entries[1].split = Split::kEval;
  entries[1].provenance = Provenance::kAugmented;
  save_manifest(dir / "out.tsv", DatasetManifest(entries));
  EXPECT_EQ(testing::read_bytes(dir / "out.tsv"),
            "audio/a-1.wav\tairport\ttrain\toriginal\n"
            "audio/b-2.wav\ttram\teval\taugmented\n");
  const DatasetManifest back = load_manifest(dir / "out.tsv");
  EXPECT_EQ(back[1].split, Split::kEval);
  EXPECT_EQ(back[1].provenance, Provenance::kAugmented);
}

TEST(Manifest, RejectsUnknownLabelsAndDuplicates) {
  TempDir dir("manifest");
  testing::write_bytes(dir / "bad.tsv", "x.wav\tbeach\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "bad.tsv"); }), ErrorCode::kUnknownLabel);
  testing::write_bytes(dir / "dup.tsv", "x.wav\tbus\nother/x.wav\tbus\n");
  EXPECT_EQ(code_of([&] { load_manifest(dir / "dup.tsv"); }), ErrorCode::kDuplicateSegment);
}

TEST(Manifest, StratifiedSplitSeventyThirty) {
  std::vector<ManifestEntry> entries;
  for (int c = 0; c < kNumScenes; ++c) {
    for (int i = 0; i < 100; ++i) {
      ManifestEntry e;
      e.segment_id = std::to_string(c) + "_" + std::to_string(i);
      e.audio_path = e.segment_id + ".wav";
      e.scene = c;
      entries.push_back(e);
    }
  }
  const DatasetManifest m(entries);
  const SplitResult a = split_dataset(m, 0.3, 42);
  const SplitResult b = split_dataset(m, 0.3, 42);
  for (int c = 0; c < kNumScenes; ++c) {
    EXPECT_EQ(a.train.class_counts()[c], 70u);
    EXPECT_EQ(a.valid.class_counts()[c], 30u);
  }
  for (const auto& e : a.valid.entries()) EXPECT_EQ(e.split, Split::kValid);
  ASSERT_EQ(a.valid.size(), b.valid.size());
  for (std::size_t i = 0; i < a.valid.size(); ++i) {
    EXPECT_EQ(a.valid[i].segment_id, b.valid[i].segment_id);
  }
  const SplitResult c = split_dataset(m, 0.3, 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.valid.size(); ++i) {
    differs = differs || a.valid[i].segment_id != c.valid[i].segment_id;
  }
  EXPECT_TRUE(differs);
}

}  // namespace
}  // namespace scene_forge
