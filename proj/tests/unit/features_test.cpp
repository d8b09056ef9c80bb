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
#include <complex>

#include "scene_forge/error.hpp"
#include "scene_forge/features.hpp"
#include "test_support.hpp"

namespace scene_forge {
namespace {

using testing::TempDir;

constexpr double kEps = 1e-10;

TEST(Stft, SymmetricHamming) {
  const auto w = hamming_window(1920);
  ASSERT_EQ(w.size(), 1920u);
  for (int n = 0; n < 1920; n += 97) {
    EXPECT_NEAR(w[n], 0.54 - 0.46 * std::cos(2 * M_PI * n / 1919.0), 1e-15);
  }
  EXPECT_DOUBLE_EQ(w.front(), w.back());
}

TEST(Stft, TenSecondsAt48kHzGives500Frames) {
  EXPECT_EQ(stft_frame_count(480000, 48000), 500);
  EXPECT_EQ(stft_frame_count(160000, 16000), 500);
  EXPECT_EQ(stft_frame_count(32000, 16000), 100);
  const std::vector<double> zeros(480000, 0.0);
  const Eigen::MatrixXd p = stft_power(zeros, 48000);
  EXPECT_EQ(p.rows(), 1025);
  EXPECT_EQ(p.cols(), 500);
  EXPECT_EQ(p.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(stft_power(std::vector<double>{}, 48000), Error);
}

TEST(Stft, SineMatchesDirectDft) {
  const int sr = 48000;
  const AudioClip clip = testing::sine_clip(1000.0, 1.0, sr);
  const Eigen::MatrixXd p = stft_power(clip.left, sr);
  const int window = 1920, hop = 960, pad = window / 4;
  const auto w = hamming_window(window);
  for (int t = 2; t < p.cols() - 2; ++t) {
    Eigen::Index arg;
    p.col(t).maxCoeff(&arg);
    ASSERT_EQ(arg, 43) << "frame " << t;
  }
  // Interior frame, no padding involved: direct O(N^2) DFT.
  const int t = 20;
  const int start = t * hop - pad;
  for (int k = 0; k <= 1024; k += 7) {
    std::complex<double> acc = 0.0;
    for (int n = 0; n < window; ++n) {
      acc += w[n] * clip.left[start + n] * std::polar(1.0, -2 * M_PI * k * n / 2048.0);
    }
    EXPECT_NEAR(p(k, t), std::norm(acc), 1e-9 * std::max(1.0, std::norm(acc))) << "bin " << k;
  }
}

TEST(Mel, FilterbankMatchesIndependentFormula) {
  const int bands = 10, n_fft = 2048, sr = 16000;
  const Eigen::MatrixXd fb = mel_filterbank(bands, n_fft, sr);
  ASSERT_EQ(fb.rows(), bands);
  ASSERT_EQ(fb.cols(), 1025);
  const auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  const auto hz = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  const double top = mel(sr / 2.0);
  for (int m = 0; m < bands; ++m) {
    const double lo = hz(top * m / (bands + 1));
    const double c = hz(top * (m + 1) / (bands + 1));
    const double hi = hz(top * (m + 2) / (bands + 1));
    for (int k = 0; k < 1025; ++k) {
      const double f = k * static_cast<double>(sr) / n_fft;
      double ref = 0.0;
      if (f > lo && f <= c) ref = (f - lo) / (c - lo);
      else if (f > c && f < hi) ref = (hi - f) / (hi - c);
      ASSERT_NEAR(fb(m, k), ref, 1e-6) << "band " << m << " bin " << k;
    }
  }
}

TEST(Mel, EightyBandsCoverTheSpectrum) {
  const Eigen::MatrixXd fb = mel_filterbank(80, 2048, 48000);
  double prev_center = -1.0;
  for (int m = 0; m < 80; ++m) {
    EXPECT_GT(fb.row(m).sum(), 0.0);
    EXPECT_GE(fb.row(m).minCoeff(), 0.0);
    Eigen::Index arg;
    fb.row(m).maxCoeff(&arg);
    EXPECT_GT(static_cast<double>(arg), prev_center);
    prev_center = static_cast<double>(arg);
  }
  // Every bin between the first and last centre is covered.
  Eigen::Index first, last;
  fb.row(0).maxCoeff(&first);
  fb.row(79).maxCoeff(&last);
  for (Eigen::Index k = first; k <= last; ++k) EXPECT_GT(fb.col(k).sum(), 0.0);
  EXPECT_THROW(mel_filterbank(2000, 256, 8000), Error);
}

TEST(Mel, LogMelFloorHomogeneityAndLoopOracle) {
  Rng rng(5);
  Eigen::MatrixXd power(1025, 4);
  for (Eigen::Index i = 0; i < power.size(); ++i) power.data()[i] = rng.uniform(0.0, 3.0);
  const Eigen::MatrixXd fb = mel_filterbank(80, 2048, 48000);

  const Eigen::MatrixXd zero = log_mel(Eigen::MatrixXd::Zero(1025, 4), fb);
  EXPECT_EQ(zero.maxCoeff(), std::log(kEps));
  EXPECT_EQ(zero.minCoeff(), std::log(kEps));

  const Eigen::MatrixXd a = log_mel(power, fb, 0.0);
  const Eigen::MatrixXd b = log_mel(10.0 * power, fb, 0.0);
  EXPECT_LT((b.array() - a.array() - std::log(10.0)).abs().maxCoeff(), 1e-12);

  const Eigen::MatrixXd lm = log_mel(power, fb);
  for (int m = 0; m < 80; ++m) {
    for (int t = 0; t < 4; ++t) {
      double e = 0.0;
      for (int k = 0; k < 1025; ++k) e += fb(m, k) * power(k, t);
      ASSERT_NEAR(lm(m, t), std::log(e + kEps), 1e-9);
    }
  }
  EXPECT_THROW(log_mel(Eigen::MatrixXd::Zero(100, 4), fb), Error);
}

TEST(Cqt, GeometricCentersAndSineBand) {
  const auto f = cqt_center_frequencies();
  ASSERT_EQ(f.size(), 80u);
  EXPECT_NEAR(f[0], 32.70, 0.01);
  for (std::size_t k = 0; k + 1 < f.size(); ++k) {
    EXPECT_NEAR(f[k + 1] / f[k], std::pow(2.0, 1.0 / 12.0), 1e-9 * std::pow(2.0, 1.0 / 12.0));
  }
  const int sr = 48000;
  const AudioClip clip = testing::sine_clip(f[40], 2.0, sr);
  const Eigen::MatrixXd c = cqt_features(clip.left, sr);
  ASSERT_EQ(c.rows(), 80);
  for (int t = 2; t < c.cols() - 2; ++t) {
    Eigen::Index arg;
    c.col(t).maxCoeff(&arg);
    ASSERT_EQ(arg, 40) << "frame " << t;
  }
  const Eigen::MatrixXd silent = cqt_features(std::vector<double>(48000, 0.0), sr);
  EXPECT_EQ(silent.maxCoeff(), std::log(kEps));
  EXPECT_EQ(silent.minCoeff(), std::log(kEps));
  // The one-bin floor keeps the narrow low bands nonempty.
  const Eigen::MatrixXd fb = cqt_filterbank(sr);
  for (int b = 0; b < 80; ++b) EXPECT_GT(fb.row(b).sum(), 0.0) << "band " << b;
}

class ExtractShape : public ::testing::TestWithParam<std::tuple<FeatureKind, ChannelMode>> {};

TEST_P(ExtractShape, TenSecondStereoAt48kHz) {
  const auto [kind, mode] = GetParam();
  const AudioClip clip = testing::random_clip(480000, 48000, 1);
  const FeatureMap m = extract_features(clip, kind, mode);
  EXPECT_EQ(m.bands, 80);
  EXPECT_EQ(m.frames, 500);
  EXPECT_EQ(m.channels, mode == ChannelMode::kMono ? 1 : 4);
  EXPECT_EQ(m.data.size(), 80u * 500u * static_cast<unsigned>(m.channels));
  for (float v : m.data) ASSERT_TRUE(std::isfinite(v));
}

INSTANTIATE_TEST_SUITE_P(AllKinds, ExtractShape,
                         ::testing::Combine(::testing::Values(FeatureKind::kMel, FeatureKind::kCqt),
                                            ::testing::Values(ChannelMode::kMono,
                                                              ChannelMode::kLrms)));

TEST(Extract, IdenticalChannelsGiveSilentSideChannel) {
  AudioClip clip = testing::random_clip(16000, 16000, 2);
  clip.right = clip.left;
  const FeatureMap m = extract_features(clip, FeatureKind::kMel, ChannelMode::kLrms);
  for (int b = 0; b < m.bands; ++b) {
    for (int t = 0; t < m.frames; ++t) ASSERT_EQ(m.at(b, t, 3), static_cast<float>(std::log(kEps)));
  }
}

TEST(Extract, DeterministicAndFileRoundTrip) {
  TempDir dir("features");
  const AudioClip clip = testing::random_clip(32000, 16000, 3);
  const FeatureMap a = extract_features(clip, FeatureKind::kCqt, ChannelMode::kLrms);
  const FeatureMap b = extract_features(clip, FeatureKind::kCqt, ChannelMode::kLrms);
  EXPECT_EQ(a.data, b.data);
  write_feature_map(dir / "seg-1.sft", a);
  const FeatureMap back = read_feature_map(dir / "seg-1.sft");
  EXPECT_EQ(back.segment_id, "seg-1");
  EXPECT_EQ(back.bands, a.bands);
  EXPECT_EQ(back.frames, a.frames);
  EXPECT_EQ(back.channels, 4);
  EXPECT_EQ(back.kind, FeatureKind::kCqt);
  EXPECT_EQ(back.mode, ChannelMode::kLrms);
  EXPECT_EQ(back.data, a.data);
  const std::string bytes = testing::read_bytes(dir / "seg-1.sft");
  EXPECT_EQ(bytes.substr(0, 4), "SFT1");
  EXPECT_EQ(bytes.size(), 4 + 12 + 2 + 4 * a.data.size());
}

TEST(Standardizer, HandComputedStatsAndFixedPoint) {
  FeatureMap a, b;
  for (FeatureMap* m : {&a, &b}) {
    m->bands = 2;
    m->frames = 2;
    m->channels = 1;
  }
  a.data = {1, 3, 10, 10};  // band 0: 1, 3; band 1: 10, 10
  b.data = {5, 7, 10, 10};
  const StandardizerStats s = fit_standardizer(std::vector<FeatureMap>{a, b});
  EXPECT_DOUBLE_EQ(s.mean[0], 4.0);
  EXPECT_DOUBLE_EQ(s.std[0], std::sqrt(5.0));
  EXPECT_DOUBLE_EQ(s.mean[1], 10.0);
  EXPECT_EQ(s.std[1], StandardizerStats::kStdFloor);
  const FeatureMap z = apply_standardizer(s, b);
  EXPECT_FLOAT_EQ(z.data[0], static_cast<float>(1.0 / std::sqrt(5.0)));
  EXPECT_EQ(z.data[2], 0.0f);

  std::vector<FeatureMap> train;
  for (int i = 0; i < 4; ++i) {
    train.push_back(extract_features(testing::random_clip(16000, 16000, 10 + i), FeatureKind::kMel,
                                     ChannelMode::kLrms));
  }
  const StandardizerStats fit = fit_standardizer(train);
  std::vector<FeatureMap> normed;
  for (const auto& m : train) normed.push_back(apply_standardizer(fit, m));
  const StandardizerStats again = fit_standardizer(normed);
  for (std::size_t i = 0; i < again.mean.size(); ++i) {
    ASSERT_LT(std::abs(again.mean[i]), 1e-6);
    ASSERT_LT(std::abs(again.std[i] - 1.0), 1e-6);
  }
  EXPECT_THROW(fit_standardizer(std::vector<FeatureMap>{}), Error);
}

}  // namespace
}  // namespace scene_forge
