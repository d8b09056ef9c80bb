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

#include "scene_forge/error.hpp"
#include "scene_forge/fusion.hpp"
#include "scene_forge/random.hpp"
#include "test_support.hpp"

namespace scene_forge {
namespace {

ScoreVector random_posterior(Rng& rng, double sharpness) {
  ScoreVector v{};
  double sum = 0.0;
  for (double& x : v) sum += x = std::exp(sharpness * rng.normal());
  for (double& x : v) x /= sum;
  return v;
}

// Noisy posteriors whose peak sits on the label with probability `skill`.
ScoreTable noisy_system(const std::string& name, const std::map<std::string, int>& labels,
                        double skill, std::uint64_t seed) {
  Rng rng(seed);
  ScoreTable t(name);
  for (const auto& [id, y] : labels) {
    ScoreVector v = random_posterior(rng, 1.0);
    const int target = rng.uniform() < skill ? y : static_cast<int>(rng.below(kNumScenes));
    v[target] += 2.0;
    double sum = 0.0;
    for (double x : v) sum += x;
    for (double& x : v) x /= sum;
    t.add(id, v);
  }
  return t;
}

std::map<std::string, int> make_labels(int n) {
  std::map<std::string, int> labels;
  for (int i = 0; i < n; ++i) labels["seg" + std::to_string(1000 + i)] = i % kNumScenes;
  return labels;
}

TEST(Fusion, AverageOfIdenticalTablesIsIdentity) {
  const auto labels = make_labels(30);
  const ScoreTable a = noisy_system("a", labels, 0.7, 1);
  const std::vector<ScoreTable> three = {a, a, a};
  const ScoreTable f = average_fusion(three);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int k = 0; k < kNumScenes; ++k) EXPECT_NEAR(f.row(i)[k], a.row(i)[k], 1e-15);
}

TEST(Fusion, AverageIsPermutationInvariantAndMatchesLoop) {
  const auto labels = make_labels(30);
  const std::vector<ScoreTable> t = {noisy_system("a", labels, 0.7, 1),
                                     noisy_system("b", labels, 0.6, 2),
                                     noisy_system("c", labels, 0.5, 3)};
  const std::vector<ScoreTable> swapped = {t[2], t[0], t[1]};
  const ScoreTable f = average_fusion(t), g = average_fusion(swapped);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto& id = f.ids()[i];
    for (int k = 0; k < kNumScenes; ++k) {
      const double mean = (t[0].at(id)[k] + t[1].at(id)[k] + t[2].at(id)[k]) / 3.0;
      EXPECT_NEAR(f.row(i)[k], mean, 1e-15);
      EXPECT_NEAR(g.at(id)[k], f.row(i)[k], 1e-15);
    }
  }
}

TEST(Fusion, AverageRejectsMismatchedSystems) {
  const auto labels = make_labels(10);
  ScoreTable a = noisy_system("a", labels, 0.7, 1);
  ScoreTable b = noisy_system("b", make_labels(9), 0.7, 2);
  const std::vector<ScoreTable> t = {a, b};
  EXPECT_THROW(average_fusion(t), Error);
  EXPECT_THROW(average_fusion(std::span<const ScoreTable>()), Error);
}

TEST(Fusion, UnitWeightLogregReproducesTheSystem) {
  const auto labels = make_labels(20);
  const ScoreTable a = noisy_system("a", labels, 0.7, 4);
  const FusionModel identity{{1.0}, {}};
  const std::vector<ScoreTable> one = {a};
  const ScoreTable out = apply_lr_fusion(identity, one);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int k = 0; k < kNumScenes; ++k) EXPECT_NEAR(out.row(i)[k], a.row(i)[k], 1e-9);
  const std::vector<ScoreTable> two = {a, a};
  EXPECT_THROW(apply_lr_fusion(identity, two), Error);
}

TEST(Fusion, LogregLossIsMonotoneAndHelps) {
  const auto labels = make_labels(200);
  const std::vector<ScoreTable> t = {noisy_system("a", labels, 0.6, 5),
                                     noisy_system("b", labels, 0.6, 6)};
  LrFusionTrace trace;
  const FusionModel m = fit_lr_fusion(t, labels, {}, &trace);
  ASSERT_GE(trace.losses.size(), 2u);
  for (std::size_t i = 1; i < trace.losses.size(); ++i) EXPECT_LE(trace.losses[i], trace.losses[i - 1]);
  EXPECT_LT(trace.losses.back(), trace.losses.front());
  EXPECT_GT(m.weights[0], 0.0);
  EXPECT_GT(m.weights[1], 0.0);
  const ScoreTable fused = apply_lr_fusion(m, t);
  EXPECT_GE(evaluate(fused, labels).overall_accuracy,
            std::max(evaluate(t[0], labels).overall_accuracy,
                     evaluate(t[1], labels).overall_accuracy));
}

TEST(Fusion, LogregNeedsLabels) {
  const auto labels = make_labels(20);
  const std::vector<ScoreTable> t = {noisy_system("a", labels, 0.6, 5)};
  std::map<std::string, int> partial = labels;
  partial.erase(partial.begin());
  EXPECT_THROW(fit_lr_fusion(t, partial), Error);
  std::map<std::string, int> single;
  for (const auto& [id, y] : labels) single[id] = 0;
  EXPECT_THROW(fit_lr_fusion(t, single), Error);
}

TEST(Scores, CsvRoundTripAndValidation) {
  testing::TempDir dir("scores");
  const auto labels = make_labels(12);
  const ScoreTable a = noisy_system("a", labels, 0.7, 7);
  write_score_csv(dir / "a.csv", a);
  const ScoreTable back = read_score_csv(dir / "a.csv");
  EXPECT_EQ(back.system_id(), "a");
  EXPECT_EQ(back.ids(), a.ids());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (int k = 0; k < kNumScenes; ++k) EXPECT_NEAR(back.row(i)[k], a.row(i)[k], 1e-8);
  const std::string text = testing::read_bytes(dir / "a.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "segment_id,airport,bus,metro,metro_station,park,public_square,shopping_mall,"
            "street_pedestrian,street_traffic,tram");

  testing::write_bytes(dir / "bad.csv", "segment_id,a\n");
  EXPECT_THROW(read_score_csv(dir / "bad.csv"), Error);
  testing::write_bytes(dir / "short.csv", text.substr(0, text.find('\n') + 1) + "x,0.5,0.5\n");
  EXPECT_THROW(read_score_csv(dir / "short.csv"), Error);
  EXPECT_THROW(read_score_csv(dir / "missing.csv"), Error);

  ScoreTable t("t");
  ScoreVector bad{};
  bad[0] = 0.5;
  EXPECT_THROW(t.add("x", bad), Error);
  ScoreVector ok{};
  ok[3] = 1.0;
  t.add("x", ok);
  EXPECT_THROW(t.add("x", ok), Error);
}

TEST(Evaluate, CountsAndConfusion) {
  ScoreTable t("t");
  std::map<std::string, int> labels;
  auto one_hot = [](int k) {
    ScoreVector v{};
    v[k] = 1.0;
    return v;
  };
  t.add("a", one_hot(0));
  labels["a"] = 0;
  t.add("b", one_hot(1));
  labels["b"] = 0;
  t.add("c", one_hot(2));
  labels["c"] = 2;
  t.add("d", one_hot(2));
  labels["d"] = 2;
  const auto r = evaluate(t, labels);
  EXPECT_DOUBLE_EQ(r.overall_accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.class_accuracy[0], 0.5);
  EXPECT_DOUBLE_EQ(r.class_accuracy[2], 1.0);
  EXPECT_EQ(r.class_counts[0], 2);
  EXPECT_EQ(r.confusion[0][1], 1);
  EXPECT_EQ(r.confusion[2][2], 2);
  EXPECT_EQ(r.segments, 4u);
  EXPECT_NE(r.to_text().find("Average"), std::string::npos);
  EXPECT_NE(r.to_csv().find("average,75.00,4\n"), std::string::npos);
  labels.erase("d");
  EXPECT_THROW(evaluate(t, labels), Error);
}

}  // namespace
}  // namespace scene_forge
