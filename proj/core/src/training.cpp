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

#include "scene_forge/training.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "scene_forge/error.hpp"
#include "scene_forge/nn/adam.hpp"
#include "scene_forge/random.hpp"

namespace scene_forge {
namespace {

void check_set(const LabeledSet& set, const char* name) {
  if (set.inputs.empty()) fail(ErrorCode::kEmptyInput, std::string(name) + " set is empty");
  if (set.inputs.size() != set.labels.size()) {
    fail(ErrorCode::kInvalidArgument, std::string(name) + " set has mismatched labels");
  }
}

nn::Tensor<float> gather(const LabeledSet& set, std::span<const std::size_t> idx,
                         std::vector<int>& labels) {
  const nn::Shape& sample = set.inputs[idx[0]].shape();
  const std::size_t stride = nn::shape_size(sample);
  nn::Tensor<float> batch(nn::batched(static_cast<int>(idx.size()), sample));
  labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& x = set.inputs[idx[i]];
    if (x.shape() != sample) fail(ErrorCode::kShapeMismatch, "inconsistent sample shapes");
    std::copy(x.values().begin(), x.values().end(), batch.data() + i * stride);
    labels[i] = set.labels[idx[i]];
  }
  return batch;
}

// Contiguous batches over `order`; a trailing batch of one sample is merged
// into its predecessor because batch norm needs two samples in training.
std::vector<std::span<const std::size_t>> make_batches(const std::vector<std::size_t>& order,
                                                       int batch_size) {
  std::vector<std::span<const std::size_t>> out;
  const std::size_t n = order.size();
  std::size_t start = 0;
  while (start < n) {
    std::size_t len = std::min<std::size_t>(batch_size, n - start);
    if (n - start - len == 1) ++len;
    out.emplace_back(order.data() + start, len);
    start += len;
  }
  return out;
}

}  // namespace

std::vector<double> TrainConfig::lr_schedule() const {
  std::vector<double> lrs;
  double lr = initial_lr;
  for (int p = 0; p < lr_phases; ++p, lr *= 0.5) lrs.push_back(lr);
  return lrs;
}

void TrainConfig::validate() const {
  if (!(initial_lr > 0.0) || patience < 0 || lr_phases < 1 || max_epochs < 1 ||
      batch_size < 2 || improvement_tolerance < 0.0) {
    fail(ErrorCode::kConfig, "invalid training configuration");
  }
}

std::vector<double> TrainHistory::best_loss_trace() const {
  std::vector<double> trace;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& e : epochs) trace.push_back(best = std::min(best, e.valid_loss));
  return trace;
}

void TrainHistory::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "epoch,phase,lr,train_loss,valid_loss,valid_acc\n";
  char line[256];
  for (const auto& e : epochs) {
    std::snprintf(line, sizeof line, "%d,%d,%.9g,%.9g,%.9g,%.9g\n", e.epoch, e.phase, e.lr,
                  e.train_loss, e.valid_loss, e.valid_acc);
    out << line;
  }
}

PatienceSchedule::PatienceSchedule(const TrainConfig& config)
    : lrs_(config.lr_schedule()),
      patience_(config.patience),
      tolerance_(config.improvement_tolerance),
      best_loss_(std::numeric_limits<double>::infinity()) {}

PatienceSchedule::Outcome PatienceSchedule::observe(int epoch, double valid_loss) {
  Outcome out;
  if (valid_loss < best_loss_ - tolerance_) {
    best_loss_ = valid_loss;
    best_epoch_ = epoch;
    reference_epoch_ = epoch;
    out.improved = true;
    return out;
  }
  if (epoch - reference_epoch_ > patience_) {
    if (phase_ + 1 < static_cast<int>(lrs_.size())) {
      ++phase_;
      reference_epoch_ = epoch;
      out.action = Action::kNextPhase;
    } else {
      out.action = Action::kStop;
    }
  }
  return out;
}

// Mean softmax cross-entropy of a logits batch; fills d(loss)/d(logits)
// when `grad` is given.
static double logits_loss(const nn::Tensor<float>& logits, std::span<const int> labels,
                   nn::Tensor<float>* grad) {
  const int n = logits.dim(0), k = logits.dim(1);
  double total = 0.0;
  std::vector<double> p(k);
  for (int s = 0; s < n; ++s) {
    const float* z = logits.data() + static_cast<std::size_t>(s) * k;
    const double peak = *std::max_element(z, z + k);
    double sum = 0.0;
    for (int i = 0; i < k; ++i) sum += p[i] = std::exp(z[i] - peak);
    const int y = labels[s];
    if (y < 0 || y >= k) fail(ErrorCode::kInvalidArgument, "label out of range");
    total += std::log(sum) - (z[y] - peak);
    if (grad) {
      for (int i = 0; i < k; ++i) {
        (*grad)[static_cast<std::size_t>(s) * k + i] =
            static_cast<float>((p[i] / sum - (i == y ? 1.0 : 0.0)) / n);
      }
    }
  }
  const double loss = total / n;
  if (!std::isfinite(loss)) fail(ErrorCode::kNonFinite, "non-finite loss");
  return loss;
}

double batch_loss(nn::Network<float>& net, const nn::Tensor<float>& batch,
                  std::span<const int> labels, bool training, bool accumulate) {
  const std::size_t end = net.logits_end();
  const nn::Tensor<float> logits = net.forward(batch, training, end);
  if (!accumulate) return logits_loss(logits, labels, nullptr);
  nn::Tensor<float> grad(logits.shape());
  const double loss = logits_loss(logits, labels, &grad);
  net.backward(grad, end);
  return loss;
}

LossAccuracy evaluate_loss(nn::Network<float>& net, const LabeledSet& data, int batch_size) {
  check_set(data, "evaluation");
  std::vector<std::size_t> order(data.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  double loss = 0.0;
  std::size_t correct = 0;
  std::vector<int> labels;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t len = std::min<std::size_t>(batch_size, order.size() - start);
    const auto idx = std::span<const std::size_t>(order).subspan(start, len);
    const nn::Tensor<float> batch = gather(data, idx, labels);
    const nn::Tensor<float> logits = net.forward(batch, false, net.logits_end());
    const int k = logits.dim(1);
    for (std::size_t s = 0; s < len; ++s) {
      const float* z = logits.data() + s * k;
      const int pred = static_cast<int>(std::max_element(z, z + k) - z);
      correct += pred == labels[s];
    }
    loss += logits_loss(logits, labels, nullptr) * static_cast<double>(len);
  }
  return {loss / order.size(), static_cast<double>(correct) / order.size()};
}

TrainHistory train(nn::Network<float>& net, const LabeledSet& train_set,
                   const LabeledSet& valid_set, const TrainConfig& config,
                   const EpochCallback& on_epoch) {
  config.validate();
  check_set(train_set, "training");
  check_set(valid_set, "validation");
  if (train_set.inputs.size() < 2) fail(ErrorCode::kEmptyInput, "need at least two training samples");

  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  net.reseed_dropout(derive_seed(config.seed, "dropout"));

  PatienceSchedule schedule(config);
  nn::AdamState<float> adam;
  std::vector<nn::Tensor<float>> best = net.snapshot();
  const auto params = net.parameters();
  TrainHistory history;

  std::vector<std::size_t> order(train_set.inputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> labels;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.phase = schedule.phase();
    rec.lr = schedule.lr();

    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    }
    double loss_sum = 0.0;
    for (const auto idx : make_batches(order, config.batch_size)) {
      const nn::Tensor<float> batch = gather(train_set, idx, labels);
      net.zero_grad();
      loss_sum += batch_loss(net, batch, labels, true, true) * static_cast<double>(idx.size());
      if (!nn::adam_step<float>(params, adam, rec.lr)) ++rec.skipped_steps;
    }
    rec.train_loss = loss_sum / order.size();

    const LossAccuracy v = evaluate_loss(net, valid_set, config.batch_size);
    if (!std::isfinite(v.loss)) fail(ErrorCode::kNonFinite, "non-finite validation loss");
    rec.valid_loss = v.loss;
    rec.valid_acc = v.accuracy;

    const auto outcome = schedule.observe(epoch, v.loss);
    rec.improved = outcome.improved;
    if (outcome.improved) best = net.snapshot();
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (outcome.action == PatienceSchedule::Action::kNextPhase) {
      history.phase_change_epochs.push_back(epoch);
      net.restore(best);
      adam = {};
    } else if (outcome.action == PatienceSchedule::Action::kStop) {
      break;
    }
  }
  net.restore(best);
  history.best_epoch = schedule.best_epoch();
  history.best_valid_loss = schedule.best_loss();
  return history;
}

}  // namespace scene_forge
