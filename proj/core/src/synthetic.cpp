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

#include "scene_forge/synthetic.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "fft.hpp"
#include "scene_forge/error.hpp"
#include "scene_forge/parallel.hpp"
#include "scene_forge/random.hpp"
#include "scene_forge/scenes.hpp"

namespace scene_forge {
namespace {

constexpr double kGroupCentersHz[] = {300.0, 520.0, 880.0, 1450.0, 2350.0};
constexpr double kToneBasesHz[] = {52.0, 58.0, 64.0, 71.0, 78.0};
constexpr double kHighBandHz[] = {4400.0, 6000.0};
constexpr double kToneShiftSemitones = 2.0;

// Gaussian-shaped noise on a log-frequency axis, unit RMS. A width of 0
// gives a pink-like broadband background instead.
std::vector<double> shaped_noise(Rng& rng, int n, int sample_rate, double center_hz,
                                 double width_octaves) {
  const int bins = n / 2 + 1;
  std::vector<std::complex<double>> spectrum(bins);
  for (int k = 1; k < bins; ++k) {
    const double f = static_cast<double>(k) * sample_rate / n;
    double gain;
    if (width_octaves > 0.0) {
      const double d = std::log2(f / center_hz) / width_octaves;
      gain = std::exp(-0.5 * d * d);
    } else {
      gain = 1.0 / std::sqrt(f + 50.0);
    }
    const double re = rng.normal(), im = rng.normal();
    spectrum[k] = gain * std::complex<double>(re, im);
  }
  std::vector<double> out(n);
  detail::inverse_real(detail::c2r_plan(n), spectrum.data(), out.data());
  double energy = 0.0;
  for (double v : out) energy += v * v;
  const double rms = std::sqrt(energy / n);
  if (rms > 0.0) for (double& v : out) v /= rms;
  return out;
}

void add_scaled(std::vector<double>& dst, const std::vector<double>& src, double gain) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += gain * src[i];
}

double db(double x) { return std::pow(10.0, x / 20.0); }

std::string clip_name(int scene, int index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%03d", std::string(kSceneLabels[scene]).c_str(), index);
  return buf;
}

}  // namespace

AudioClip synthesize_clip(int scene, int index, const SyntheticConfig& config) {
  if (scene < 0 || scene >= kNumScenes) fail(ErrorCode::kInvalidArgument, "scene out of range");
  if (config.sample_rate < 16000) {
    fail(ErrorCode::kInvalidArgument, "synthetic corpus needs a sample rate of at least 16 kHz");
  }
  const int n = static_cast<int>(std::lround(config.duration_s * config.sample_rate));
  if (n < 2) fail(ErrorCode::kInvalidArgument, "clip duration too short");
  Rng rng(derive_seed(config.seed, clip_name(scene, index)));
  const int group = scene / 2, variant = scene % 2;
  const int sr = config.sample_rate;

  // Clip-level draws shared by both channels.
  const double group_center = kGroupCentersHz[group] * std::exp2(rng.uniform(-0.1, 0.1));
  const bool has_tone = rng.uniform() >= config.tone_dropout;
  const bool has_band = rng.uniform() >= config.band_dropout;
  const double f0 = kToneBasesHz[group] *
                    std::exp2((variant * kToneShiftSemitones +
                               rng.uniform(-config.pitch_jitter, config.pitch_jitter)) / 12.0);
  const double tone_gain = db(rng.uniform(-6.0, 0.0));
  const double band_gain = db(rng.uniform(-12.0, -6.0));
  const double band_center = kHighBandHz[variant] * std::exp2(rng.uniform(-0.05, 0.05));
  const double background_gain = db(config.background_db + rng.uniform(-3.0, 3.0));
  const double phase0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double tremolo_hz = rng.uniform(0.5, 3.0);

  AudioClip clip;
  clip.sample_rate = sr;
  for (int ch = 0; ch < 2; ++ch) {
    std::vector<double> x(n, 0.0);
    add_scaled(x, shaped_noise(rng, n, sr, group_center, 0.3), 1.0);
    add_scaled(x, shaped_noise(rng, n, sr, 0.0, 0.0), background_gain);
    if (has_band) add_scaled(x, shaped_noise(rng, n, sr, band_center, 0.08), band_gain);
    if (has_tone) {
      const double g = tone_gain * (ch == 0 ? 1.0 : rng.uniform(0.8, 1.2)) * std::numbers::sqrt2;
      for (int i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        const double env = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * tremolo_hz * t);
        const double w = 2.0 * std::numbers::pi * f0 * t + phase0;
        x[i] += g * env * (std::sin(w) + 0.5 * std::sin(2.0 * w));
      }
    }
    (ch == 0 ? clip.left : clip.right) = std::move(x);
  }

  double peak = 0.0;
  for (double v : clip.left) peak = std::max(peak, std::abs(v));
  for (double v : clip.right) peak = std::max(peak, std::abs(v));
  const double scale = rng.uniform(0.3, 0.8) / std::max(peak, 1e-12);
  for (double& v : clip.left) v *= scale;
  for (double& v : clip.right) v *= scale;
  return clip;
}

DatasetManifest make_synthetic_corpus(const SyntheticConfig& config,
                                      const std::filesystem::path& out_dir) {
  if (config.clips_per_class < 3) {
    fail(ErrorCode::kInvalidArgument, "need at least 3 clips per class");
  }
  if (config.valid_fraction <= 0.0 || config.eval_fraction <= 0.0 ||
      config.valid_fraction + config.eval_fraction >= 1.0) {
    fail(ErrorCode::kInvalidArgument, "split fractions must be positive and sum below 1");
  }
  std::filesystem::create_directories(out_dir);
  const int per = config.clips_per_class;
  const auto count = [&](double f) {
    return std::clamp<int>(static_cast<int>(std::lround(per * f)), 1, per - 2);
  };
  const int n_valid = count(config.valid_fraction);
  const int n_eval = std::min(count(config.eval_fraction), per - n_valid - 1);

  std::vector<ManifestEntry> entries(static_cast<std::size_t>(kNumScenes) * per);
  for (int c = 0; c < kNumScenes; ++c) {
    std::vector<int> order(per);
    for (int i = 0; i < per; ++i) order[i] = i;
    Rng rng(derive_seed(config.seed, "split:" + std::string(kSceneLabels[c])));
    for (int i = per - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (int r = 0; r < per; ++r) {
      const int i = order[r];
      auto& e = entries[static_cast<std::size_t>(c) * per + i];
      e.segment_id = clip_name(c, i);
      e.audio_path = out_dir / (e.segment_id + ".wav");
      e.scene = c;
      e.split = r < n_valid ? Split::kValid : r < n_valid + n_eval ? Split::kEval : Split::kTrain;
    }
  }
  parallel_for(entries.size(), config.jobs, [&](std::size_t k) {
    const int c = static_cast<int>(k) / per, i = static_cast<int>(k) % per;
    write_wav(entries[k].audio_path, synthesize_clip(c, i, config));
  });
  DatasetManifest manifest(std::move(entries));
  save_manifest(out_dir / "manifest.tsv", manifest);
  return manifest;
}

}  // namespace scene_forge
