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
#include <optional>
#include <string>
#include <vector>

#include "scene_forge/audio_io.hpp"
#include "scene_forge/fusion.hpp"
#include "settings.hpp"

namespace scene_forge::cli {

struct PipelineOptions {
  Settings settings;
  /// Entries with train and eval splits; a valid split is carved out of
  /// train (settings.valid_fraction) when absent.
  DatasetManifest manifest;
  std::filesystem::path out_dir;
  /// Shared feature directory root; defaults to out_dir/features. Feature
  /// sets whose index matches the manifest are reused.
  std::optional<std::filesystem::path> feature_root;
  int jobs = 1;
  std::ostream* log = nullptr;
};

struct SystemResult {
  std::string name;
  EvaluationReport report;
};

struct PipelineResult {
  std::vector<SystemResult> systems;  // single systems, pipeline order
  SystemResult average;
  std::optional<SystemResult> logreg;

  const SystemResult& get(const std::string& name) const;
};

/// features -> (augment) -> train -> score -> RLDA/cosine -> fuse ->
/// evaluate, writing models, score tables and reports under out_dir.
PipelineResult run_pipeline(const PipelineOptions& options);

/// DCASE 2018 development layout: evaluation_setup/fold<N>_train.txt and
/// fold<N>_evaluate.txt list "audio/<file>.wav<TAB>label" relative to root.
DatasetManifest load_dcase_fold(const std::filesystem::path& root, int fold = 1);

}  // namespace scene_forge::cli
