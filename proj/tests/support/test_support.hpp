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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <unistd.h>

#include "scene_forge/audio_io.hpp"
#include "scene_forge/random.hpp"

namespace scene_forge::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("sf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline AudioClip random_clip(std::size_t samples, int sample_rate, std::uint64_t seed,
                             double amplitude = 0.5) {
  Rng rng(seed);
  AudioClip clip;
  clip.sample_rate = sample_rate;
  clip.left.resize(samples);
  clip.right.resize(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    clip.left[i] = rng.uniform(-amplitude, amplitude);
    clip.right[i] = rng.uniform(-amplitude, amplitude);
  }
  return clip;
}

inline AudioClip sine_clip(double freq, double seconds, int sample_rate, double amplitude = 0.5) {
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(seconds * sample_rate));
  clip.left.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    clip.left[i] = amplitude * std::sin(2.0 * M_PI * freq * static_cast<double>(i) / sample_rate);
  }
  clip.right = clip.left;
  return clip;
}

/// Little-endian RIFF/WAVE writer independent of the library's encoder.
inline std::string wav_bytes(int channels, int sample_rate, int bits, int format_tag,
                             const std::string& payload) {
  std::string out;
  const auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  const auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
  };
  out += "RIFF";
  u32(static_cast<std::uint32_t>(36 + payload.size()));
  out += "WAVEfmt ";
  u32(16);
  u16(static_cast<std::uint16_t>(format_tag));
  u16(static_cast<std::uint16_t>(channels));
  u32(static_cast<std::uint32_t>(sample_rate));
  u32(static_cast<std::uint32_t>(sample_rate * channels * bits / 8));
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(static_cast<std::uint16_t>(bits));
  out += "data";
  u32(static_cast<std::uint32_t>(payload.size()));
  out += payload;
  return out;
}

inline std::string pcm16_payload(const std::vector<std::int16_t>& interleaved) {
  std::string out;
  for (std::int16_t s : interleaved) {
    const auto u = static_cast<std::uint16_t>(s);
    out.push_back(static_cast<char>(u & 0xff));
    out.push_back(static_cast<char>(u >> 8));
  }
  return out;
}

}  // namespace scene_forge::testing
