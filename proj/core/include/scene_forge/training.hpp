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
#include <functional>
#include <vector>

#include "scene_forge/nn/network.hpp"

namespace scene_forge {

struct TrainConfig {
  double initial_lr = 0.001;
  int patience = 20;
  int lr_phases = 3;
  int max_epochs = 200;
  int batch_size = 64;
  double improvement_tolerance = 1e-5;
  std::uint64_t seed = 0;

  /// initial_lr halved once per phase boundary.
  std::vector<double> lr_schedule() const;
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  int phase = 0;  // 0-based
  double lr = 0.0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
  double valid_acc = 0.0;
  bool improved = false;
  int skipped_steps = 0;  // Adam steps dropped for non-finite gradients
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::vector<int> phase_change_epochs;  // epochs at whose end lr was halved
  int best_epoch = 0;
  double best_valid_loss = 0.0;

  /// Running minimum of the validation loss after each epoch.
  std::vector<double> best_loss_trace() const;
  void write_csv(const std::filesystem::path& path) const;
};

/// Patience bookkeeping, separated from the optimizer so it can be driven
/// by an injected loss sequence. A phase change fires at the end of the
/// epoch that is patience + 1 epochs after the reference epoch, where the
/// reference is the later of the last improvement and the last phase change.
class PatienceSchedule {
 public:
  enum class Action { kContinue, kNextPhase, kStop };

  explicit PatienceSchedule(const TrainConfig& config);

  struct Outcome {
    bool improved = false;
    Action action = Action::kContinue;
  };
  Outcome observe(int epoch, double valid_loss);

  double lr() const { return lrs_[phase_]; }
  int phase() const { return phase_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::vector<double> lrs_;
  int patience_;
  double tolerance_;
  int phase_ = 0;
  int best_epoch_ = 0;
  int reference_epoch_ = 0;
  double best_loss_;
};

struct LabeledSet {
  std::vector<nn::Tensor<float>> inputs;  // per-sample tensors
  std::vector<int> labels;
};

struct LossAccuracy {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and accuracy in inference mode.
LossAccuracy evaluate_loss(nn::Network<float>& net, const LabeledSet& data, int batch_size = 64);

/// Mean cross-entropy of one batch; with `accumulate` the gradient is
/// back-propagated into the parameters (which are not zeroed first).
double batch_loss(nn::Network<float>& net, const nn::Tensor<float>& batch,
                  std::span<const int> labels, bool training, bool accumulate);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Adam with patience-based lr halving. Each phase change restores the best
/// parameters and buffers and resets the Adam moments. On return the network
/// holds the parameters with the lowest validation loss seen.
TrainHistory train(nn::Network<float>& net, const LabeledSet& train_set,
                   const LabeledSet& valid_set, const TrainConfig& config,
                   const EpochCallback& on_epoch = {});

}  // namespace scene_forge
