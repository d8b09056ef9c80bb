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

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "scene_forge/models.hpp"
#include "scene_forge/scenes.hpp"

namespace scene_forge {

enum class ScoreSpace { kPosterior, kLogPosterior };

inline constexpr double kLogPosteriorFloor = 1e-10;

/// One system's scores, one row per segment in insertion order.
class ScoreTable {
 public:
  ScoreTable() = default;
  explicit ScoreTable(std::string system_id, ScoreSpace space = ScoreSpace::kPosterior)
      : system_id_(std::move(system_id)), space_(space) {}

  /// Rejects duplicate ids; posterior rows must be nonnegative and sum to 1
  /// within 1e-5.
  void add(const std::string& segment_id, const ScoreVector& scores);

  const std::string& system_id() const { return system_id_; }
  ScoreSpace space() const { return space_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<ScoreVector>& rows() const { return rows_; }
  const ScoreVector& row(std::size_t i) const { return rows_[i]; }
  const ScoreVector& at(const std::string& segment_id) const;
  bool contains(const std::string& segment_id) const { return index_.count(segment_id) > 0; }

  /// log(max(p, 1e-10)) per cell.
  ScoreTable to_log_space() const;

 private:
  std::string system_id_;
  ScoreSpace space_ = ScoreSpace::kPosterior;
  std::vector<std::string> ids_;
  std::vector<ScoreVector> rows_;
  std::map<std::string, std::size_t> index_;
};

/// Header `segment_id,airport,...,tram`, 9 significant digits.
void write_score_csv(const std::filesystem::path& path, const ScoreTable& table);
ScoreTable read_score_csv(const std::filesystem::path& path, std::string system_id = "");

ScoreTable average_fusion(std::span<const ScoreTable> tables);

struct FusionModel {
  std::vector<double> weights;  // one per system
  ScoreVector offsets{};
};

struct LrFusionConfig {
  double lr = 0.01;
  double fallback_lr = 0.001;
  int iterations = 500;
  double gradient_tolerance = 1e-6;
};

struct LrFusionTrace {
  std::vector<double> losses;  // loss before the first step, then after each accepted step
  int iterations = 0;
  int rejected_steps = 0;
  bool converged = false;
};

/// Full-batch Adam on softmax cross-entropy from zero initialization. A step
/// that raises the loss is undone and the lr drops to the fallback (then
/// halves on further rises), so the recorded loss never increases.
FusionModel fit_lr_fusion(std::span<const ScoreTable> tables,
                          const std::map<std::string, int>& labels,
                          const LrFusionConfig& config = {}, LrFusionTrace* trace = nullptr);

ScoreTable apply_lr_fusion(const FusionModel& model, std::span<const ScoreTable> tables);

struct EvaluationReport {
  double overall_accuracy = 0.0;
  std::array<double, kNumScenes> class_accuracy{};
  std::array<int, kNumScenes> class_counts{};
  std::array<std::array<int, kNumScenes>, kNumScenes> confusion{};  // [reference][predicted]
  std::size_t segments = 0;

  /// Scene / accuracy table with an Average row, then the confusion matrix.
  std::string to_text() const;
  /// scene,accuracy_percent rows followed by overall.
  std::string to_csv() const;
};

EvaluationReport evaluate(const ScoreTable& predictions, const std::map<std::string, int>& labels);

}  // namespace scene_forge
