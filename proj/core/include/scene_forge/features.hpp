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

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "scene_forge/audio_io.hpp"

namespace scene_forge {

enum class FeatureKind : std::uint8_t { kMel = 0, kCqt = 1 };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& text);

struct FeatureConfig {
  double window_ms = 40.0;
  double hop_ms = 20.0;
  int fft_size = 2048;
  int num_bands = 80;
  double log_floor = 1e-10;
  double cqt_fmin = 32.703195662574829;  // C1
  int cqt_bins_per_octave = 12;
};

/// Log-spectral tensor of shape bands x frames x channels. Storage is
/// band-major, frame-next, channel-last, matching the SFT1 file layout.
struct FeatureMap {
  int bands = 0;
  int frames = 0;
  int channels = 0;
  FeatureKind kind = FeatureKind::kMel;
  ChannelMode mode = ChannelMode::kMono;
  std::string segment_id;
  std::vector<float> data;

  std::size_t index(int band, int frame, int channel) const {
    return (static_cast<std::size_t>(band) * frames + frame) * channels + channel;
  }
  float at(int band, int frame, int channel) const {
    return data[index(band, frame, channel)];
  }
  float& at(int band, int frame, int channel) {
    return data[index(band, frame, channel)];
  }
};

/// Symmetric Hamming window of the given length.
std::vector<double> hamming_window(int length);

int stft_frame_count(std::size_t num_samples, int sample_rate,
                     const FeatureConfig& config = {});

/// Power spectrogram, (fft_size/2 + 1) x frames. The signal is reflection
/// padded by a quarter window on each side, so a signal whose length is a
/// multiple of the hop yields exactly length/hop frames when the window is
/// twice the hop.
Eigen::MatrixXd stft_power(std::span<const double> signal, int sample_rate,
                           const FeatureConfig& config = {});

/// Triangular mel filters (peak 1, not area normalized), num_bands x
/// (fft_size/2 + 1), centers uniform on mel = 2595 log10(1 + f/700) between
/// 0 Hz and sample_rate/2.
Eigen::MatrixXd mel_filterbank(int num_bands, int fft_size, int sample_rate);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// log(fb * power + floor)
Eigen::MatrixXd log_mel(const Eigen::MatrixXd& power, const Eigen::MatrixXd& fb,
                        double log_floor = 1e-10);

/// Center frequencies of the constant-Q bands.
std::vector<double> cqt_center_frequencies(const FeatureConfig& config = {});

/// Constant-Q triangular filterbank over STFT bins. Each triangle spans the
/// neighbouring band centers but is never narrower than one FFT bin on
/// either side, so every band sees at least one bin.
Eigen::MatrixXd cqt_filterbank(int sample_rate, const FeatureConfig& config = {});

/// Pseudo-CQT log spectrogram, num_bands x frames.
Eigen::MatrixXd cqt_features(std::span<const double> signal, int sample_rate,
                             const FeatureConfig& config = {});

/// zero_mean -> derive_channels -> per-channel log spectrogram -> stack.
FeatureMap extract_features(const AudioClip& clip, FeatureKind kind,
                            ChannelMode mode, const FeatureConfig& config = {});

/// Per-band, per-channel normalization statistics fitted on training maps.
struct StandardizerStats {
  int bands = 0;
  int channels = 0;
  std::vector<double> mean;  // bands x channels
  std::vector<double> std;   // bands x channels, floored at kStdFloor

  static constexpr double kStdFloor = 1e-8;
};

StandardizerStats fit_standardizer(std::span<const FeatureMap> maps);
FeatureMap apply_standardizer(const StandardizerStats& stats, const FeatureMap& map);

void write_feature_map(const std::filesystem::path& path, const FeatureMap& map);
/// segment_id is taken from the file stem.
FeatureMap read_feature_map(const std::filesystem::path& path);

}  // namespace scene_forge
