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

#include "scene_forge/audio_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "binary_io.hpp"
#include "scene_forge/error.hpp"
#include "scene_forge/random.hpp"
#include "scene_forge/scenes.hpp"

namespace scene_forge {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}
std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

std::optional<Split> parse_split(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "valid") return Split::kValid;
  if (s == "eval") return Split::kEval;
  return std::nullopt;
}

int channel_count(ChannelMode mode) {
  return mode == ChannelMode::kMono ? 1 : 4;
}

std::string to_string(ChannelMode mode) {
  return mode == ChannelMode::kMono ? "m" : "lrms";
}

ChannelMode parse_channel_mode(const std::string& text) {
  if (text == "m" || text == "M") return ChannelMode::kMono;
  if (text == "lrms" || text == "LRMS") return ChannelMode::kLrms;
  fail(ErrorCode::kInvalidArgument, "unknown channel mode '" + text + "'");
}

AudioClip read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  const std::vector<unsigned char> bytes(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string();

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    fail(ErrorCode::kMalformedHeader, where + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) {
        fail(ErrorCode::kMalformedHeader, where + ": short fmt chunk");
      }
      const unsigned char* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) {
          fail(ErrorCode::kMalformedHeader, where + ": short extensible fmt");
        }
        format = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) {
        fail(ErrorCode::kMalformedHeader, where + ": data before fmt chunk");
      }
      data = bytes.data() + body;
      data_size = size;
      if (body + size > bytes.size()) {
        fail(ErrorCode::kTruncatedData,
             where + ": data chunk extends past end of file");
      }
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) fail(ErrorCode::kMalformedHeader, where + ": missing fmt chunk");
  if (data == nullptr) {
    fail(ErrorCode::kTruncatedData, where + ": missing data chunk");
  }
  if (rate == 0) fail(ErrorCode::kMalformedHeader, where + ": zero sample rate");
  if (channels != 1 && channels != 2) {
    fail(ErrorCode::kUnsupportedEncoding,
         where + ": " + std::to_string(channels) + " channels");
  }
  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    fail(ErrorCode::kUnsupportedEncoding,
         where + ": format " + std::to_string(format) + " with " +
             std::to_string(bits) + " bits");
  }
  const std::size_t frame_bytes = channels * (bits / 8);
  if (data_size % frame_bytes != 0) {
    fail(ErrorCode::kTruncatedData, where + ": partial sample frame");
  }

  const std::size_t frames = data_size / frame_bytes;
  AudioClip clip;
  clip.sample_rate = static_cast<int>(rate);
  clip.left.resize(frames);
  clip.right.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * (bits / 8);
      double v;
      if (pcm16) {
        v = static_cast<std::int16_t>(read_u16(p)) / 32768.0;
      } else {
        float f;
        const std::uint32_t raw = read_u32(p);
        std::memcpy(&f, &raw, sizeof f);
        if (!std::isfinite(f)) {
          fail(ErrorCode::kUnsupportedEncoding, where + ": non-finite sample");
        }
        v = f;
      }
      (c == 0 ? clip.left : clip.right)[i] = v;
    }
    if (channels == 1) clip.right[i] = clip.left[i];
  }
  return clip;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding) {
  if (clip.left.size() != clip.right.size()) {
    fail(ErrorCode::kShapeMismatch, "channel lengths differ");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const std::uint16_t bits = pcm16 ? 16 : 32;
  const std::uint16_t channels = 2;
  const std::uint32_t block = channels * bits / 8;
  const auto data_size = static_cast<std::uint32_t>(clip.num_samples() * block);
  using detail::put_le;
  out.write("RIFF", 4);
  put_le<std::uint32_t>(out, 36 + data_size);
  out.write("WAVEfmt ", 8);
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, pcm16 ? kFormatPcm : kFormatFloat);
  put_le<std::uint16_t>(out, channels);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * block);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(block));
  put_le<std::uint16_t>(out, bits);
  out.write("data", 4);
  put_le<std::uint32_t>(out, data_size);
  for (std::size_t i = 0; i < clip.num_samples(); ++i) {
    for (double v : {clip.left[i], clip.right[i]}) {
      if (pcm16) {
        const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        put_le<std::uint16_t>(
            out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
      } else {
        detail::put_f32(out, static_cast<float>(v));
      }
    }
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

AudioClip zero_mean(const AudioClip& clip) {
  if (clip.empty()) fail(ErrorCode::kEmptyInput, "zero_mean of an empty clip");
  AudioClip out = clip;
  for (auto* channel : {&out.left, &out.right}) {
    const double mean =
        std::accumulate(channel->begin(), channel->end(), 0.0) / channel->size();
    for (double& v : *channel) v -= mean;
  }
  return out;
}

ChannelSet derive_channels(const AudioClip& clip, ChannelMode mode) {
  if (clip.left.size() != clip.right.size()) {
    fail(ErrorCode::kShapeMismatch, "channel lengths differ");
  }
  const std::size_t n = clip.num_samples();
  ChannelSet set;
  set.mode = mode;
  if (mode == ChannelMode::kMono) {
    std::vector<double> mono(n);
    for (std::size_t i = 0; i < n; ++i) mono[i] = (clip.left[i] + clip.right[i]) / 2;
    set.signals.push_back(std::move(mono));
    return set;
  }
  std::vector<double> mid(n), side(n);
  for (std::size_t i = 0; i < n; ++i) {
    mid[i] = clip.left[i] + clip.right[i];
    side[i] = clip.left[i] - clip.right[i];
  }
  set.signals = {clip.left, clip.right, std::move(mid), std::move(side)};
  return set;
}

std::string to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kEval: return "eval";
  }
  return "train";
}

std::string to_string(Provenance provenance) {
  return provenance == Provenance::kOriginal ? "original" : "augmented";
}

std::string segment_id_from_path(const std::filesystem::path& path) {
  return path.stem().string();
}

DatasetManifest::DatasetManifest(std::vector<ManifestEntry> entries)
    : entries_(std::move(entries)) {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.scene < 0 || e.scene >= kNumScenes) {
      fail(ErrorCode::kUnknownLabel, "scene index out of range for " + e.segment_id);
    }
    if (!seen.insert(e.segment_id).second) {
      fail(ErrorCode::kDuplicateSegment, "segment id '" + e.segment_id + "'");
    }
  }
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
  std::vector<std::size_t> counts(kNumScenes, 0);
  for (const auto& e : entries_) ++counts[e.scene];
  return counts;
}

DatasetManifest DatasetManifest::filter(Split split) const {
  std::vector<ManifestEntry> kept;
  for (const auto& e : entries_) {
    if (e.split == split) kept.push_back(e);
  }
  return DatasetManifest(std::move(kept));
}

const ManifestEntry* DatasetManifest::find(const std::string& segment_id) const {
  for (const auto& e : entries_) {
    if (e.segment_id == segment_id) return &e;
  }
  return nullptr;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read manifest " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> seen;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_tabs(line);
    if (row == 1 && fields[0] == "filename") continue;
    const std::string where = path.string() + ":" + std::to_string(row);
    if (fields.size() < 2) {
      fail(ErrorCode::kFormat, where + ": expected audio_path<TAB>scene_label");
    }
    ManifestEntry e;
    e.audio_path = fields[0];
    if (e.audio_path.is_relative() && !base.empty()) {
      e.audio_path = (base / e.audio_path).lexically_normal();
    }
    const auto scene = scene_index(fields[1]);
    if (!scene) {
      fail(ErrorCode::kUnknownLabel, where + ": unknown scene label '" + fields[1] + "'");
    }
    e.scene = *scene;
    if (fields.size() >= 3) {
      if (auto split = parse_split(fields[2])) e.split = *split;
    }
    if (fields.size() >= 4 && fields[3] == "augmented") {
      e.provenance = Provenance::kAugmented;
    }
    e.segment_id = segment_id_from_path(fields[0]);
    if (!seen.insert(e.segment_id).second) {
      fail(ErrorCode::kDuplicateSegment,
           where + ": segment id '" + e.segment_id + "' already used");
    }
    entries.push_back(std::move(e));
  }
  return DatasetManifest(std::move(entries));
}

void save_manifest(const std::filesystem::path& path,
                   const DatasetManifest& manifest) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write manifest " + path.string());
  const auto base = std::filesystem::absolute(path).parent_path().lexically_normal();
  for (const auto& e : manifest.entries()) {
    // Paths under the manifest directory are stored relative to it.
    auto audio = std::filesystem::absolute(e.audio_path).lexically_normal();
    const auto rel = audio.lexically_relative(base);
    if (!rel.empty() && *rel.begin() != "..") audio = rel;
    out << audio.string() << '\t' << kSceneLabels[e.scene] << '\t'
        << to_string(e.split) << '\t' << to_string(e.provenance) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

SplitResult split_dataset(const DatasetManifest& manifest,
                          double valid_fraction, std::uint64_t seed) {
  if (!(valid_fraction > 0.0 && valid_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "valid_fraction must lie in (0, 1)");
  }
  std::array<std::vector<std::size_t>, kNumScenes> by_class;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    by_class[manifest[i].scene].push_back(i);
  }
  std::vector<bool> to_valid(manifest.size(), false);
  Rng rng(seed);
  for (int c = 0; c < kNumScenes; ++c) {
    auto& idx = by_class[c];
    if (idx.empty()) {
      fail(ErrorCode::kClassTooSmall,
           "no entries for scene '" + std::string(kSceneLabels[c]) + "'");
    }
    if (idx.size() < 2) {
      fail(ErrorCode::kClassTooSmall,
           "scene '" + std::string(kSceneLabels[c]) +
               "' needs at least 2 entries to split");
    }
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.below(i)]);
    }
    auto n_valid = static_cast<std::size_t>(std::llround(idx.size() * valid_fraction));
    n_valid = std::clamp<std::size_t>(n_valid, 1, idx.size() - 1);
    for (std::size_t k = 0; k < n_valid; ++k) to_valid[idx[k]] = true;
  }
  std::vector<ManifestEntry> train, valid;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    ManifestEntry e = manifest[i];
    if (to_valid[i]) {
      e.split = Split::kValid;
      valid.push_back(std::move(e));
    } else {
      e.split = Split::kTrain;
      train.push_back(std::move(e));
    }
  }
  return {DatasetManifest(std::move(train)), DatasetManifest(std::move(valid))};
}

}  // namespace scene_forge
