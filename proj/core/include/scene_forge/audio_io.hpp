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

namespace scene_forge {

/// Stereo PCM audio, samples normalized to [-1, 1]. Mono sources are
/// duplicated into both channels on load.
struct AudioClip {
  std::vector<double> left;
  std::vector<double> right;
  int sample_rate = 0;

  std::size_t num_samples() const { return left.size(); }
  bool empty() const { return left.empty(); }
};

enum class ChannelMode : std::uint8_t { kMono = 0, kLrms = 1 };

int channel_count(ChannelMode mode);
std::string to_string(ChannelMode mode);
ChannelMode parse_channel_mode(const std::string& text);

/// Channel variants fed to feature extraction: {(L+R)/2} for kMono,
/// {L, R, L+R, L-R} for kLrms.
struct ChannelSet {
  ChannelMode mode = ChannelMode::kMono;
  std::vector<std::vector<double>> signals;
};

enum class WavEncoding { kPcm16, kFloat32 };

/// Reads RIFF/WAVE PCM16 or IEEE float32, mono or stereo. Throws Error with
/// kMalformedHeader, kUnsupportedEncoding or kTruncatedData.
AudioClip read_wav(const std::filesystem::path& path);

/// PCM16 output rounds to the nearest step and saturates at full scale.
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::kPcm16);

/// Removes the DC offset of each channel independently.
AudioClip zero_mean(const AudioClip& clip);

ChannelSet derive_channels(const AudioClip& clip, ChannelMode mode);

enum class Split : std::uint8_t { kTrain, kValid, kEval };
enum class Provenance : std::uint8_t { kOriginal, kAugmented };

std::string to_string(Split split);
std::optional<Split> parse_split(const std::string& text);
std::string to_string(Provenance provenance);

struct ManifestEntry {
  std::string segment_id;
  std::filesystem::path audio_path;
  int scene = 0;
  Split split = Split::kTrain;
  Provenance provenance = Provenance::kOriginal;
};

/// Immutable after construction: segment ids are unique and every label
/// is one of the ten scene classes.
class DatasetManifest {
 public:
  DatasetManifest() = default;
  /// Validates uniqueness; throws kDuplicateSegment.
  explicit DatasetManifest(std::vector<ManifestEntry> entries);

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ManifestEntry& operator[](std::size_t i) const { return entries_[i]; }

  /// Entries per scene class, indexed by class.
  std::vector<std::size_t> class_counts() const;
  DatasetManifest filter(Split split) const;
  const ManifestEntry* find(const std::string& segment_id) const;

 private:
  std::vector<ManifestEntry> entries_;
};

/// Tab-separated rows: audio_path, scene_label[, split[, provenance]].
/// DCASE meta files load unmodified: a leading "filename" header row is
/// skipped and a third column that is not a split name is ignored. Relative
/// audio paths resolve against the manifest's directory.
DatasetManifest load_manifest(const std::filesystem::path& path);

void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& manifest);

struct SplitResult {
  DatasetManifest train;
  DatasetManifest valid;
};

/// Per-class stratified random split. Each class contributes
/// round(n * valid_fraction) entries to valid, clamped so neither side of a
/// class is empty.
SplitResult split_dataset(const DatasetManifest& manifest,
                          double valid_fraction, std::uint64_t seed);

/// segment_id convention shared by manifests, feature files and score
/// tables.
std::string segment_id_from_path(const std::filesystem::path& path);

}  // namespace scene_forge
