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

#include "scene_forge/fusion.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scene_forge/error.hpp"

namespace scene_forge {
namespace {

void check_compatible(std::span<const ScoreTable> tables, ScoreSpace space) {
  if (tables.empty()) fail(ErrorCode::kEmptyInput, "no score tables given");
  const ScoreTable& ref = tables.front();
  for (const auto& t : tables) {
    if (t.space() != space) fail(ErrorCode::kInvalidArgument, "score space mismatch");
    if (t.size() != ref.size()) {
      fail(ErrorCode::kShapeMismatch, "system '" + t.system_id() + "' covers " +
                                          std::to_string(t.size()) + " segments, expected " +
                                          std::to_string(ref.size()));
    }
    for (const auto& id : ref.ids()) {
      if (!t.contains(id)) {
        fail(ErrorCode::kShapeMismatch, "segment '" + id + "' missing from system '" +
                                            t.system_id() + "'");
      }
    }
  }
}

ScoreVector softmax(const ScoreVector& s) {
  ScoreVector p{};
  const double peak = *std::max_element(s.begin(), s.end());
  double sum = 0.0;
  for (int k = 0; k < kNumScenes; ++k) sum += p[k] = std::exp(s[k] - peak);
  for (double& v : p) v /= sum;
  return p;
}

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// Per segment: log-score matrix [system][class] in table order of the first
// system.
struct FusionInputs {
  std::vector<std::string> ids;
  std::vector<std::vector<ScoreVector>> logs;  // [segment][system]
};

FusionInputs gather_log_scores(std::span<const ScoreTable> tables) {
  check_compatible(tables, ScoreSpace::kPosterior);
  std::vector<ScoreTable> logs;
  for (const auto& t : tables) logs.push_back(t.to_log_space());
  FusionInputs in{tables.front().ids(), {}};
  for (const auto& id : in.ids) {
    auto& row = in.logs.emplace_back();
    for (const auto& t : logs) row.push_back(t.at(id));
  }
  return in;
}

ScoreVector fused_logits(const FusionModel& m, const std::vector<ScoreVector>& logs) {
  ScoreVector s = m.offsets;
  for (std::size_t j = 0; j < logs.size(); ++j)
    for (int k = 0; k < kNumScenes; ++k) s[k] += m.weights[j] * logs[j][k];
  return s;
}

double fusion_loss(const FusionModel& m, const FusionInputs& in, std::span<const int> labels,
                   std::vector<double>* grad) {
  const std::size_t nsys = m.weights.size();
  if (grad) grad->assign(nsys + kNumScenes, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < in.ids.size(); ++i) {
    const ScoreVector s = fused_logits(m, in.logs[i]);
    const double peak = *std::max_element(s.begin(), s.end());
    double sum = 0.0;
    for (double v : s) sum += std::exp(v - peak);
    const int y = labels[i];
    loss += std::log(sum) + peak - s[y];
    if (!grad) continue;
    for (int k = 0; k < kNumScenes; ++k) {
      const double d = std::exp(s[k] - peak) / sum - (k == y ? 1.0 : 0.0);
      (*grad)[nsys + k] += d;
      for (std::size_t j = 0; j < nsys; ++j) (*grad)[j] += d * in.logs[i][j][k];
    }
  }
  const double n = static_cast<double>(in.ids.size());
  if (grad) for (double& g : *grad) g /= n;
  return loss / n;
}

}  // namespace

void ScoreTable::add(const std::string& segment_id, const ScoreVector& scores) {
  if (index_.count(segment_id)) {
    fail(ErrorCode::kDuplicateSegment, "duplicate segment '" + segment_id + "' in scores");
  }
  for (double v : scores) {
    if (!std::isfinite(v)) fail(ErrorCode::kNonFinite, "non-finite score for " + segment_id);
  }
  if (space_ == ScoreSpace::kPosterior) {
    double sum = 0.0;
    for (double v : scores) {
      if (v < 0.0) fail(ErrorCode::kInvalidArgument, "negative posterior for " + segment_id);
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-5) {
      fail(ErrorCode::kInvalidArgument, "posteriors for " + segment_id + " sum to " +
                                            format_g9(sum));
    }
  }
  index_.emplace(segment_id, ids_.size());
  ids_.push_back(segment_id);
  rows_.push_back(scores);
}

const ScoreVector& ScoreTable::at(const std::string& segment_id) const {
  const auto it = index_.find(segment_id);
  if (it == index_.end()) fail(ErrorCode::kInvalidArgument, "no scores for '" + segment_id + "'");
  return rows_[it->second];
}

ScoreTable ScoreTable::to_log_space() const {
  if (space_ == ScoreSpace::kLogPosterior) return *this;
  ScoreTable out(system_id_, ScoreSpace::kLogPosterior);
  for (std::size_t i = 0; i < size(); ++i) {
    ScoreVector l{};
    for (int k = 0; k < kNumScenes; ++k) l[k] = std::log(std::max(rows_[i][k], kLogPosteriorFloor));
    out.add(ids_[i], l);
  }
  return out;
}

void write_score_csv(const std::filesystem::path& path, const ScoreTable& table) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "segment_id";
  for (const auto& label : kSceneLabels) out << ',' << label;
  out << '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.ids()[i];
    for (double v : table.row(i)) out << ',' << format_g9(v);
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

ScoreTable read_score_csv(const std::filesystem::path& path, std::string system_id) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  if (system_id.empty()) system_id = path.stem().string();
  std::string line;
  std::getline(in, line);
  std::string expected = "segment_id";
  for (const auto& label : kSceneLabels) expected += "," + std::string(label);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected) fail(ErrorCode::kFormat, path.string() + ": unexpected score header");
  ScoreTable table(system_id);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string id, cell;
    std::getline(fields, id, ',');
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    bool ok = cells.size() == kNumScenes;
    ScoreVector row{};
    for (int k = 0; ok && k < kNumScenes; ++k) {
      const char* b = cells[k].data();
      const char* e = b + cells[k].size();
      const auto [p, ec] = std::from_chars(b, e, row[k]);
      ok = ec == std::errc() && p == e;
    }
    if (!ok) {
      fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": malformed row");
    }
    table.add(id, row);
  }
  return table;
}

ScoreTable average_fusion(std::span<const ScoreTable> tables) {
  check_compatible(tables, ScoreSpace::kPosterior);
  ScoreTable out("average");
  const double k = static_cast<double>(tables.size());
  for (const auto& id : tables.front().ids()) {
    ScoreVector sum{};
    for (const auto& t : tables) {
      const ScoreVector& r = t.at(id);
      for (int c = 0; c < kNumScenes; ++c) sum[c] += r[c];
    }
    for (double& v : sum) v /= k;
    out.add(id, sum);
  }
  return out;
}

FusionModel fit_lr_fusion(std::span<const ScoreTable> tables,
                          const std::map<std::string, int>& labels,
                          const LrFusionConfig& config, LrFusionTrace* trace) {
  const FusionInputs in = gather_log_scores(tables);
  std::vector<int> y;
  std::array<int, kNumScenes> seen{};
  for (const auto& id : in.ids) {
    const auto it = labels.find(id);
    if (it == labels.end()) fail(ErrorCode::kUnknownLabel, "no label for segment '" + id + "'");
    if (it->second < 0 || it->second >= kNumScenes) fail(ErrorCode::kUnknownLabel, "bad label");
    y.push_back(it->second);
    ++seen[it->second];
  }
  if (std::count_if(seen.begin(), seen.end(), [](int c) { return c > 0; }) < 2) {
    fail(ErrorCode::kClassTooSmall, "fusion training needs at least two classes");
  }

  const std::size_t nsys = tables.size();
  const std::size_t np = nsys + kNumScenes;
  FusionModel model{std::vector<double>(nsys, 0.0), {}};
  auto unpack = [&](const std::vector<double>& theta) {
    FusionModel m{std::vector<double>(theta.begin(), theta.begin() + nsys), {}};
    for (int k = 0; k < kNumScenes; ++k) m.offsets[k] = theta[nsys + k];
    return m;
  };

  std::vector<double> theta(np, 0.0), m1(np, 0.0), m2(np, 0.0), grad;
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double lr = config.lr;
  double loss = fusion_loss(model, in, y, &grad);
  LrFusionTrace local;
  local.losses.push_back(loss);
  long step = 0;
  for (int it = 0; it < config.iterations; ++it) {
    double gmax = 0.0;
    for (double g : grad) gmax = std::max(gmax, std::abs(g));
    if (gmax < config.gradient_tolerance) {
      local.converged = true;
      break;
    }
    ++step;
    std::vector<double> cand = theta, c1 = m1, c2 = m2;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    for (std::size_t p = 0; p < np; ++p) {
      c1[p] = beta1 * c1[p] + (1 - beta1) * grad[p];
      c2[p] = beta2 * c2[p] + (1 - beta2) * grad[p] * grad[p];
      cand[p] -= lr * (c1[p] / bc1) / (std::sqrt(c2[p] / bc2) + eps);
    }
    std::vector<double> cand_grad;
    const double cand_loss = fusion_loss(unpack(cand), in, y, &cand_grad);
    ++local.iterations;
    if (!(cand_loss <= loss)) {
      --step;
      ++local.rejected_steps;
      lr = lr > config.fallback_lr ? config.fallback_lr : lr * 0.5;
      continue;
    }
    theta = std::move(cand);
    m1 = std::move(c1);
    m2 = std::move(c2);
    grad = std::move(cand_grad);
    loss = cand_loss;
    local.losses.push_back(loss);
  }
  model = unpack(theta);
  for (double w : model.weights) {
    if (!std::isfinite(w)) fail(ErrorCode::kNonFinite, "fusion weights diverged");
  }
  if (trace) *trace = std::move(local);
  return model;
}

ScoreTable apply_lr_fusion(const FusionModel& model, std::span<const ScoreTable> tables) {
  if (tables.size() != model.weights.size()) {
    fail(ErrorCode::kShapeMismatch, "fusion model expects " +
                                        std::to_string(model.weights.size()) + " systems, got " +
                                        std::to_string(tables.size()));
  }
  const FusionInputs in = gather_log_scores(tables);
  ScoreTable out("logreg");
  for (std::size_t i = 0; i < in.ids.size(); ++i) {
    out.add(in.ids[i], softmax(fused_logits(model, in.logs[i])));
  }
  return out;
}

EvaluationReport evaluate(const ScoreTable& predictions, const std::map<std::string, int>& labels) {
  if (predictions.size() == 0) fail(ErrorCode::kEmptyInput, "no predictions to evaluate");
  EvaluationReport r;
  std::array<int, kNumScenes> correct{};
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& id = predictions.ids()[i];
    const auto it = labels.find(id);
    if (it == labels.end()) fail(ErrorCode::kUnknownLabel, "no reference label for '" + id + "'");
    const int ref = it->second;
    if (ref < 0 || ref >= kNumScenes) fail(ErrorCode::kUnknownLabel, "bad label for " + id);
    const int pred = argmax(predictions.row(i));
    ++r.confusion[ref][pred];
    ++r.class_counts[ref];
    if (pred == ref) {
      ++correct[ref];
      ++hits;
    }
  }
  r.segments = predictions.size();
  r.overall_accuracy = static_cast<double>(hits) / r.segments;
  for (int c = 0; c < kNumScenes; ++c) {
    r.class_accuracy[c] = r.class_counts[c] ? static_cast<double>(correct[c]) / r.class_counts[c] : 0.0;
  }
  return r;
}

std::string EvaluationReport::to_text() const {
  std::ostringstream out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-20s %10s %9s\n", "Scene label", "Accuracy", "Segments");
  out << buf << std::string(41, '-') << '\n';
  for (int c = 0; c < kNumScenes; ++c) {
    if (class_counts[c] == 0) {
      std::snprintf(buf, sizeof buf, "%-20s %10s %9d\n",
                    std::string(scene_display_name(c)).c_str(), "-", 0);
    } else {
      std::snprintf(buf, sizeof buf, "%-20s %9.1f%% %9d\n",
                    std::string(scene_display_name(c)).c_str(), 100.0 * class_accuracy[c],
                    class_counts[c]);
    }
    out << buf;
  }
  out << std::string(41, '-') << '\n';
  std::snprintf(buf, sizeof buf, "%-20s %9.1f%% %9zu\n", "Average", 100.0 * overall_accuracy,
                segments);
  out << buf << "\nConfusion matrix (rows: reference, columns: predicted)\n";
  out << std::string(20, ' ');
  for (int c = 0; c < kNumScenes; ++c) {
    std::snprintf(buf, sizeof buf, "%5d", c);
    out << buf;
  }
  out << '\n';
  for (int r = 0; r < kNumScenes; ++r) {
    std::snprintf(buf, sizeof buf, "%2d %-17s", r, std::string(kSceneLabels[r]).substr(0, 17).c_str());
    out << buf;
    for (int c = 0; c < kNumScenes; ++c) {
      std::snprintf(buf, sizeof buf, "%5d", confusion[r][c]);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string EvaluationReport::to_csv() const {
  std::ostringstream out;
  out << "scene,accuracy_percent,segments\n";
  char buf[96];
  for (int c = 0; c < kNumScenes; ++c) {
    std::snprintf(buf, sizeof buf, "%s,%.2f,%d\n", std::string(kSceneLabels[c]).c_str(),
                  100.0 * class_accuracy[c], class_counts[c]);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "average,%.2f,%zu\n", 100.0 * overall_accuracy, segments);
  out << buf;
  return out.str();
}

}  // namespace scene_forge
