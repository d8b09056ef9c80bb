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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace scene_forge {

/// X-vectors with scene labels (label -1 when unknown, e.g. evaluation data).
struct XVectorSet {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> vectors;
  std::vector<int> labels;

  std::size_t size() const { return vectors.size(); }
  int dim() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
  /// Rows are vectors.
  Eigen::MatrixXd matrix() const;
};

struct ScatterMatrices {
  Eigen::MatrixXd within;
  Eigen::MatrixXd between;
};

/// Regularized within- and between-class scatter. Every class in
/// [0, num_classes) must have at least one vector; num_classes = 0 means
/// max label + 1. The global mean is the mean of the class means.
ScatterMatrices scatter_matrices(const Eigen::MatrixXd& vectors, std::span<const int> labels,
                                 double alpha, double beta, int num_classes = 0);

struct RldaConfig {
  int out_dim = 100;
  double alpha = 0.001;
  double beta = 0.01;
};

struct RldaTransform {
  Eigen::MatrixXd projection;   // out_dim x in_dim
  Eigen::VectorXd eigenvalues;  // descending
  Eigen::MatrixXd class_means;  // classes x out_dim, unit rows
  double alpha = 0.0;
  double beta = 0.0;

  int in_dim() const { return static_cast<int>(projection.cols()); }
  int out_dim() const { return static_cast<int>(projection.rows()); }
  int num_classes() const { return static_cast<int>(class_means.rows()); }
};

/// Generalized eigenproblem S_b v = lambda S_w v, rows scaled so that
/// v^T S_w v = 1 and signed so each row's largest-magnitude entry is positive.
RldaTransform fit_rlda(const Eigen::MatrixXd& vectors, std::span<const int> labels,
                       const RldaConfig& config = {}, int num_classes = 0);
RldaTransform fit_rlda(const XVectorSet& set, const RldaConfig& config = {});

Eigen::VectorXd project(const RldaTransform& rlda, std::span<const double> x);

struct CosineScores {
  std::vector<double> scores;
  bool zero_norm = false;  // projected vector vanished; scores are all 0
};

CosineScores cosine_scores(const RldaTransform& rlda, std::span<const double> x);

inline constexpr double kDefaultCosineTemperature = 0.1;

/// softmax(scores / temperature)
std::vector<double> calibrate_cosine(std::span<const double> scores,
                                     double temperature = kDefaultCosineTemperature);

void save_rlda(const std::filesystem::path& path, const RldaTransform& rlda);
RldaTransform load_rlda(const std::filesystem::path& path);

/// "XVC1": count, dim, then per entry id, label and f64 components.
void save_xvectors(const std::filesystem::path& path, const XVectorSet& set);
XVectorSet load_xvectors(const std::filesystem::path& path);

}  // namespace scene_forge
