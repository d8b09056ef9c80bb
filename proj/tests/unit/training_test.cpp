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

#include "scene_forge/error.hpp"
#include "scene_forge/training.hpp"
#include "test_support.hpp"

namespace scene_forge {
namespace {

using Action = PatienceSchedule::Action;

TEST(Schedule, HalvesFromInitialRate) {
  TrainConfig c;
  EXPECT_EQ(c.lr_schedule(), (std::vector<double>{0.001, 0.0005, 0.00025}));
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Schedule, TransitionsTwentyOneEpochsAfterLastImprovement) {
  TrainConfig c;
  PatienceSchedule s(c);
  int epoch = 0;
  for (; epoch < 5; ++epoch) EXPECT_TRUE(s.observe(epoch + 1, 1.0 - 0.1 * epoch).improved);
  const int last_improvement = epoch;  // 5
  int change = 0;
  while (change == 0) {
    ++epoch;
    const auto out = s.observe(epoch, 2.0);
    EXPECT_FALSE(out.improved);
    if (out.action == Action::kNextPhase) change = epoch;
  }
  EXPECT_EQ(change - last_improvement, 21);
  EXPECT_EQ(s.lr(), 0.0005);
  EXPECT_EQ(s.best_epoch(), 5);
}

TEST(Schedule, ImprovementWithinToleranceDoesNotCount) {
  TrainConfig c;
  c.patience = 2;
  PatienceSchedule s(c);
  EXPECT_TRUE(s.observe(1, 1.0).improved);
  EXPECT_FALSE(s.observe(2, 1.0 - 5e-6).improved);
  EXPECT_TRUE(s.observe(3, 0.9).improved);
  EXPECT_EQ(s.best_loss(), 0.9);
}

TEST(Schedule, StopsAfterTheLastPhase) {
  TrainConfig c;
  c.patience = 1;
  PatienceSchedule s(c);
  std::vector<std::pair<int, Action>> events;
  for (int e = 1; e <= 20; ++e) {
    const auto out = s.observe(e, e == 1 ? 1.0 : 5.0);
    if (out.action != Action::kContinue) events.emplace_back(e, out.action);
    if (out.action == Action::kStop) break;
  }
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[0], std::make_pair(3, Action::kNextPhase));
  EXPECT_EQ(events[1], std::make_pair(5, Action::kNextPhase));
  EXPECT_EQ(events[2], std::make_pair(7, Action::kStop));
}

// Three Gaussian blobs that a linear model separates perfectly.
LabeledSet blobs(int per_class, std::uint64_t seed) {
  Rng rng(seed);
  LabeledSet set;
  const double centers[3][2] = {{3, 0}, {-3, 3}, {-3, -3}};
  for (int i = 0; i < per_class * 3; ++i) {
    const int c = i % 3;
    nn::Tensor<float> x({2});
    x[0] = static_cast<float>(centers[c][0] + 0.5 * rng.normal());
    x[1] = static_cast<float>(centers[c][1] + 0.5 * rng.normal());
    set.inputs.push_back(x);
    set.labels.push_back(c);
  }
  return set;
}

TEST(Train, SeparableSetReachesHighAccuracyDeterministically) {
  const LabeledSet train_set = blobs(50, 1);
  const LabeledSet valid_set = blobs(20, 2);
  const std::vector<nn::LayerSpec> specs = {nn::LayerSpec::dense(8), nn::LayerSpec::relu(),
                                            nn::LayerSpec::dense(3), nn::LayerSpec::softmax()};
  TrainConfig c;
  c.initial_lr = 0.01;
  c.batch_size = 16;
  c.max_epochs = 40;
  c.patience = 5;
  c.seed = 4;
  nn::Network<float> a({2}, specs, 9);
  std::vector<EpochRecord> seen;
  const TrainHistory ha = train(a, train_set, valid_set, c, [&](const EpochRecord& r) { seen.push_back(r); });
  EXPECT_GE(evaluate_loss(a, valid_set).accuracy, 0.95);
  EXPECT_EQ(seen.size(), ha.epochs.size());
  EXPECT_NEAR(evaluate_loss(a, valid_set).loss, ha.best_valid_loss, 1e-6);

  const auto trace = ha.best_loss_trace();
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1]);

  nn::Network<float> b({2}, specs, 9);
  const TrainHistory hb = train(b, train_set, valid_set, c);
  ASSERT_EQ(ha.epochs.size(), hb.epochs.size());
  for (std::size_t i = 0; i < ha.epochs.size(); ++i) {
    EXPECT_EQ(ha.epochs[i].train_loss, hb.epochs[i].train_loss);
    EXPECT_EQ(ha.epochs[i].valid_loss, hb.epochs[i].valid_loss);
  }
}

TEST(Train, HistoryCsv) {
  testing::TempDir dir("history");
  TrainHistory h;
  h.epochs.push_back({1, 0, 0.001, 2.5, 2.25, 0.5, true, 0});
  h.epochs.push_back({2, 1, 0.0005, 2.0, 2.5, 0.25, false, 0});
  h.write_csv(dir / "h.csv");
  EXPECT_EQ(testing::read_bytes(dir / "h.csv"),
            "epoch,phase,lr,train_loss,valid_loss,valid_acc\n"
            "1,0,0.001,2.5,2.25,0.5\n"
            "2,1,0.0005,2,2.5,0.25\n");
}

}  // namespace
}  // namespace scene_forge
