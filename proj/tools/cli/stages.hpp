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
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scene_forge/backend.hpp"
#include "scene_forge/features.hpp"
#include "scene_forge/fusion.hpp"
#include "scene_forge/models.hpp"
#include "scene_forge/training.hpp"
#include "settings.hpp"

namespace scene_forge::cli {

struct FeatureRecord {
  std::string segment_id;
  std::filesystem::path file;
  int scene = 0;
  Split split = Split::kTrain;
  Provenance provenance = Provenance::kOriginal;
};

/// Directory of SFT1 files plus a features.tsv index.
struct FeatureIndex {
  std::filesystem::path dir;
  std::vector<FeatureRecord> records;

  std::vector<FeatureRecord> select(std::optional<Split> split) const;
  bool has_split(Split split) const;
};

inline constexpr const char* kFeatureIndexName = "features.tsv";

/// Extracts features for every manifest entry (in parallel, output order
/// fixed by the manifest) and writes the index.
FeatureIndex extract_feature_dir(const DatasetManifest& manifest, FeatureKind kind,
                                 ChannelMode mode, const FeatureConfig& config,
                                 const std::filesystem::path& dir, int jobs);

FeatureIndex load_feature_index(const std::filesystem::path& dir);

std::vector<FeatureMap> load_maps(const FeatureIndex& index,
                                  const std::vector<FeatureRecord>& records, int jobs);

/// segment_id -> scene for the given records.
std::map<std::string, int> label_map(const std::vector<FeatureRecord>& records);
std::map<std::string, int> label_map(const DatasetManifest& manifest);

/// Stratified train/valid split of train-split records when the index
/// carries no valid split; otherwise returns the existing partition.
struct TrainValid {
  std::vector<FeatureRecord> train;
  std::vector<FeatureRecord> valid;
};
TrainValid train_valid_records(const FeatureIndex& index, double valid_fraction,
                               std::uint64_t seed);

struct TrainedNetwork {
  Model model;
  TrainHistory history;
};

/// Fits the standardizer (when enabled), builds the model from the data
/// shape and runs the training schedule. `log` receives one line per epoch.
TrainedNetwork train_network(Topology topology, const std::vector<FeatureMap>& train_maps,
                             const std::vector<int>& train_labels,
                             const std::vector<FeatureMap>& valid_maps,
                             const std::vector<int>& valid_labels, const Settings& settings,
                             std::uint64_t seed, std::ostream* log);

std::vector<int> labels_of(const std::vector<FeatureMap>& maps,
                           const std::map<std::string, int>& labels);

ScoreTable predict_table(Model& model, const std::vector<FeatureMap>& maps,
                         const std::string& system_id, int batch_size);

XVectorSet xvector_set(Model& model, const std::vector<FeatureMap>& maps,
                       const std::map<std::string, int>& labels, int batch_size);

/// Calibrated cosine posteriors; `zero_norm` counts degenerate vectors.
ScoreTable cosine_table(const RldaTransform& rlda, const XVectorSet& set, double temperature,
                        const std::string& system_id, int* zero_norm = nullptr);

std::string format_schedule(const TrainConfig& config);

}  // namespace scene_forge::cli
