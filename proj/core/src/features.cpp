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

#include "scene_forge/features.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

#include "binary_io.hpp"
#include "fft.hpp"
#include "scene_forge/error.hpp"

namespace scene_forge {
namespace {

struct FrameGeometry {
  int window = 0;
  int hop = 0;
  int pad_left = 0;
  int pad_right = 0;
};

FrameGeometry geometry(int sample_rate, const FeatureConfig& config) {
  if (sample_rate <= 0) fail(ErrorCode::kInvalidArgument, "sample rate must be positive");
  FrameGeometry g;
  g.window = static_cast<int>(std::lround(config.window_ms * 1e-3 * sample_rate));
  g.hop = static_cast<int>(std::lround(config.hop_ms * 1e-3 * sample_rate));
  if (g.window < 2 || g.hop < 1) {
    fail(ErrorCode::kInvalidArgument, "window or hop too short for the sample rate");
  }
  if (g.window > config.fft_size) {
    fail(ErrorCode::kInvalidArgument, "window of " + std::to_string(g.window) +
                                          " samples exceeds the FFT size");
  }
  const int pad_total = g.window / 2;
  g.pad_left = pad_total / 2;
  g.pad_right = pad_total - g.pad_left;
  return g;
}

// Reflection about the first/last sample (numpy "reflect").
double reflected(std::span<const double> x, long i) {
  const long n = static_cast<long>(x.size());
  if (i < 0) i = -i;
  if (i >= n) i = 2 * (n - 1) - i;
  return x[static_cast<std::size_t>(i)];
}

double triangle(double f, double lo, double center, double hi) {
  if (f <= lo || f >= hi) return 0.0;
  return f <= center ? (f - lo) / (center - lo) : (hi - f) / (hi - center);
}

Eigen::MatrixXd log_floor_apply(const Eigen::MatrixXd& energies, double floor) {
  return (energies.array() + floor).log().matrix();
}

}  // namespace

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::kMel ? "mel" : "cqt";
}

FeatureKind parse_feature_kind(const std::string& text) {
  if (text == "mel" || text == "MEL") return FeatureKind::kMel;
  if (text == "cqt" || text == "CQT") return FeatureKind::kCqt;
  fail(ErrorCode::kInvalidArgument, "unknown feature kind '" + text + "'");
}

std::vector<double> hamming_window(int length) {
  std::vector<double> w(length, 1.0);
  if (length == 1) return w;
  for (int n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  }
  return w;
}

int stft_frame_count(std::size_t num_samples, int sample_rate,
                     const FeatureConfig& config) {
  const FrameGeometry g = geometry(sample_rate, config);
  const long padded = static_cast<long>(num_samples) + g.pad_left + g.pad_right;
  if (padded < g.window) return 0;
  return static_cast<int>(1 + (padded - g.window) / g.hop);
}

Eigen::MatrixXd stft_power(std::span<const double> signal, int sample_rate,
                           const FeatureConfig& config) {
  if (signal.empty()) fail(ErrorCode::kEmptyInput, "stft of an empty signal");
  const FrameGeometry g = geometry(sample_rate, config);
  if (static_cast<long>(signal.size()) <= g.pad_left) {
    fail(ErrorCode::kInvalidArgument, "signal shorter than the reflection pad");
  }
  const int frames = stft_frame_count(signal.size(), sample_rate, config);
  if (frames <= 0) fail(ErrorCode::kInvalidArgument, "signal shorter than one window");

  const int n_fft = config.fft_size;
  const int bins = n_fft / 2 + 1;
  const std::vector<double> window = hamming_window(g.window);
  fftw_plan plan = detail::r2c_plan(n_fft);

  Eigen::MatrixXd power(bins, frames);
  std::vector<double> buffer(n_fft, 0.0);
  std::vector<std::complex<double>> spectrum(bins);
  for (int t = 0; t < frames; ++t) {
    const long start = static_cast<long>(t) * g.hop - g.pad_left;
    for (int i = 0; i < g.window; ++i) {
      buffer[i] = reflected(signal, start + i) * window[i];
    }
    detail::forward_real(plan, buffer.data(), spectrum.data());
    for (int k = 0; k < bins; ++k) power(k, t) = std::norm(spectrum[k]);
  }
  return power;
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Eigen::MatrixXd mel_filterbank(int num_bands, int fft_size, int sample_rate) {
  if (num_bands < 1) fail(ErrorCode::kInvalidArgument, "num_bands must be positive");
  const int bins = fft_size / 2 + 1;
  const double top = hz_to_mel(sample_rate / 2.0);
  std::vector<double> edges(num_bands + 2);
  for (int i = 0; i < num_bands + 2; ++i) {
    edges[i] = mel_to_hz(top * i / (num_bands + 1));
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(num_bands, bins);
  for (int m = 0; m < num_bands; ++m) {
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / fft_size;
      fb(m, k) = triangle(f, edges[m], edges[m + 1], edges[m + 2]);
    }
    if (fb.row(m).sum() <= 0.0) {
      fail(ErrorCode::kInvalidArgument,
           std::to_string(num_bands) + " mel bands exceed the usable FFT bins");
    }
  }
  return fb;
}

Eigen::MatrixXd log_mel(const Eigen::MatrixXd& power, const Eigen::MatrixXd& fb,
                        double log_floor) {
  if (fb.cols() != power.rows()) {
    fail(ErrorCode::kShapeMismatch,
         "filterbank has " + std::to_string(fb.cols()) + " bins, power has " +
             std::to_string(power.rows()));
  }
  return log_floor_apply(fb * power, log_floor);
}

std::vector<double> cqt_center_frequencies(const FeatureConfig& config) {
  std::vector<double> f(config.num_bands);
  for (int k = 0; k < config.num_bands; ++k) {
    f[k] = config.cqt_fmin *
           std::pow(2.0, static_cast<double>(k) / config.cqt_bins_per_octave);
  }
  return f;
}

Eigen::MatrixXd cqt_filterbank(int sample_rate, const FeatureConfig& config) {
  const int bins = config.fft_size / 2 + 1;
  const double bin_hz = static_cast<double>(sample_rate) / config.fft_size;
  const double step = std::pow(2.0, 1.0 / config.cqt_bins_per_octave);
  const std::vector<double> centers = cqt_center_frequencies(config);
  if (centers.back() * step >= sample_rate / 2.0) {
    fail(ErrorCode::kInvalidArgument, "constant-Q bands exceed the Nyquist frequency");
  }
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(config.num_bands, bins);
  for (int b = 0; b < config.num_bands; ++b) {
    const double c = centers[b];
    const double lo = c - std::max(c - c / step, bin_hz);
    const double hi = c + std::max(c * step - c, bin_hz);
    for (int k = 0; k < bins; ++k) fb(b, k) = triangle(k * bin_hz, lo, c, hi);
  }
  return fb;
}

Eigen::MatrixXd cqt_features(std::span<const double> signal, int sample_rate,
                             const FeatureConfig& config) {
  return log_mel(stft_power(signal, sample_rate, config),
                 cqt_filterbank(sample_rate, config), config.log_floor);
}

FeatureMap extract_features(const AudioClip& clip, FeatureKind kind,
                            ChannelMode mode, const FeatureConfig& config) {
  const ChannelSet channels = derive_channels(zero_mean(clip), mode);
  const Eigen::MatrixXd fb =
      kind == FeatureKind::kMel
          ? mel_filterbank(config.num_bands, config.fft_size, clip.sample_rate)
          : cqt_filterbank(clip.sample_rate, config);

  FeatureMap map;
  map.kind = kind;
  map.mode = mode;
  map.bands = config.num_bands;
  map.channels = static_cast<int>(channels.signals.size());
  for (int c = 0; c < map.channels; ++c) {
    const Eigen::MatrixXd spec = log_mel(
        stft_power(channels.signals[c], clip.sample_rate, config), fb,
        config.log_floor);
    if (c == 0) {
      map.frames = static_cast<int>(spec.cols());
      map.data.assign(static_cast<std::size_t>(map.bands) * map.frames * map.channels, 0.f);
    }
    for (int b = 0; b < map.bands; ++b) {
      for (int t = 0; t < map.frames; ++t) map.at(b, t, c) = static_cast<float>(spec(b, t));
    }
  }
  return map;
}

StandardizerStats fit_standardizer(std::span<const FeatureMap> maps) {
  if (maps.empty()) fail(ErrorCode::kEmptyInput, "no feature maps to fit");
  StandardizerStats stats;
  stats.bands = maps[0].bands;
  stats.channels = maps[0].channels;
  const std::size_t cells = static_cast<std::size_t>(stats.bands) * stats.channels;
  std::vector<double> sum(cells, 0.0), sum_sq(cells, 0.0);
  double count = 0;
  for (const auto& m : maps) {
    if (m.bands != stats.bands || m.channels != stats.channels) {
      fail(ErrorCode::kShapeMismatch, "feature maps disagree in bands/channels");
    }
    count += m.frames;
  }
  // Two passes: the mean first, then centered squares, for accuracy.
  for (const auto& m : maps) {
    for (int b = 0; b < m.bands; ++b)
      for (int t = 0; t < m.frames; ++t)
        for (int c = 0; c < m.channels; ++c) sum[b * m.channels + c] += m.at(b, t, c);
  }
  stats.mean.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) stats.mean[i] = sum[i] / count;
  for (const auto& m : maps) {
    for (int b = 0; b < m.bands; ++b)
      for (int t = 0; t < m.frames; ++t)
        for (int c = 0; c < m.channels; ++c) {
          const double d = m.at(b, t, c) - stats.mean[b * m.channels + c];
          sum_sq[b * m.channels + c] += d * d;
        }
  }
  stats.std.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    stats.std[i] = std::max(std::sqrt(sum_sq[i] / count), StandardizerStats::kStdFloor);
  }
  return stats;
}

FeatureMap apply_standardizer(const StandardizerStats& stats, const FeatureMap& map) {
  if (map.bands != stats.bands || map.channels != stats.channels) {
    fail(ErrorCode::kShapeMismatch, "standardizer shape does not match feature map");
  }
  FeatureMap out = map;
  for (int b = 0; b < map.bands; ++b)
    for (int t = 0; t < map.frames; ++t)
      for (int c = 0; c < map.channels; ++c) {
        const std::size_t s = static_cast<std::size_t>(b) * map.channels + c;
        out.at(b, t, c) =
            static_cast<float>((map.at(b, t, c) - stats.mean[s]) / stats.std[s]);
      }
  return out;
}

void write_feature_map(const std::filesystem::path& path, const FeatureMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  detail::put_magic(out, "SFT1");
  detail::put_u32(out, static_cast<std::uint32_t>(map.bands));
  detail::put_u32(out, static_cast<std::uint32_t>(map.frames));
  detail::put_u32(out, static_cast<std::uint32_t>(map.channels));
  detail::put_u8(out, static_cast<std::uint8_t>(map.kind));
  detail::put_u8(out, static_cast<std::uint8_t>(map.mode));
  for (float v : map.data) detail::put_f32(out, v);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

FeatureMap read_feature_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  detail::expect_magic(in, "SFT1", path.string());
  FeatureMap map;
  map.bands = static_cast<int>(detail::get_u32(in));
  map.frames = static_cast<int>(detail::get_u32(in));
  map.channels = static_cast<int>(detail::get_u32(in));
  const std::uint8_t kind = detail::get_u8(in);
  const std::uint8_t mode = detail::get_u8(in);
  if (kind > 1 || mode > 1 || map.bands <= 0 || map.frames <= 0 ||
      (map.channels != 1 && map.channels != 4) ||
      map.channels != channel_count(static_cast<ChannelMode>(mode))) {
    fail(ErrorCode::kFormat, path.string() + ": inconsistent SFT1 header");
  }
  map.kind = static_cast<FeatureKind>(kind);
  map.mode = static_cast<ChannelMode>(mode);
  map.segment_id = segment_id_from_path(path);
  map.data.resize(static_cast<std::size_t>(map.bands) * map.frames * map.channels);
  for (float& v : map.data) v = detail::get_f32(in);
  return map;
}

}  // namespace scene_forge
