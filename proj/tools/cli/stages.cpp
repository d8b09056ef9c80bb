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

#include "stages.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "scene_forge/error.hpp"
#include "scene_forge/parallel.hpp"
#include "scene_forge/random.hpp"

namespace scene_forge::cli {
namespace {

Split split_field(const std::string& s) {
  if (auto split = parse_split(s)) return *split;
  fail(ErrorCode::kFormat, "unknown split '" + s + "'");
}

Provenance parse_provenance(const std::string& s) {
  if (s == "original") return Provenance::kOriginal;
  if (s == "augmented") return Provenance::kAugmented;
  fail(ErrorCode::kFormat, "unknown provenance '" + s + "'");
}

}  // namespace

std::vector<FeatureRecord> FeatureIndex::select(std::optional<Split> split) const {
  std::vector<FeatureRecord> out;
  for (const auto& r : records) {
    if (!split || r.split == *split) out.push_back(r);
  }
  return out;
}

bool FeatureIndex::has_split(Split split) const {
  return std::any_of(records.begin(), records.end(),
                     [&](const FeatureRecord& r) { return r.split == split; });
}

FeatureIndex extract_feature_dir(const DatasetManifest& manifest, FeatureKind kind,
                                 ChannelMode mode, const FeatureConfig& config,
                                 const std::filesystem::path& dir, int jobs) {
  if (manifest.empty()) fail(ErrorCode::kEmptyInput, "manifest has no entries");
  std::filesystem::create_directories(dir);
  FeatureIndex index{dir, std::vector<FeatureRecord>(manifest.size())};
  parallel_for(manifest.size(), jobs, [&](std::size_t i) {
    const ManifestEntry& e = manifest[i];
    FeatureMap map = extract_features(read_wav(e.audio_path), kind, mode, config);
    map.segment_id = e.segment_id;
    const std::filesystem::path file = e.segment_id + ".sft";
    write_feature_map(dir / file, map);
    index.records[i] = {e.segment_id, file, e.scene, e.split, e.provenance};
  });
  std::ofstream out(dir / kFeatureIndexName);
  if (!out) fail(ErrorCode::kIo, "cannot write feature index in " + dir.string());
  out << "segment_id\tfile\tscene\tsplit\tprovenance\n";
  for (const auto& r : index.records) {
    out << r.segment_id << '\t' << r.file.string() << '\t' << kSceneLabels[r.scene] << '\t'
        << to_string(r.split) << '\t' << to_string(r.provenance) << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for feature index in " + dir.string());
  return index;
}

FeatureIndex load_feature_index(const std::filesystem::path& dir) {
  const auto path = dir / kFeatureIndexName;
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "feature index not found: " + path.string());
  FeatureIndex index{dir, {}};
  std::string line;
  std::getline(in, line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, '\t');) f.push_back(cell);
    if (f.size() != 5) {
      fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
    }
    const auto scene = scene_index(f[2]);
    if (!scene) fail(ErrorCode::kUnknownLabel, path.string() + ": unknown scene '" + f[2] + "'");
    index.records.push_back({f[0], f[1], *scene, split_field(f[3]), parse_provenance(f[4])});
  }
  if (index.records.empty()) fail(ErrorCode::kEmptyInput, path.string() + " lists no features");
  return index;
}

std::vector<FeatureMap> load_maps(const FeatureIndex& index,
                                  const std::vector<FeatureRecord>& records, int jobs) {
  std::vector<FeatureMap> maps(records.size());
  parallel_for(records.size(), jobs, [&](std::size_t i) {
    maps[i] = read_feature_map(index.dir / records[i].file);
    maps[i].segment_id = records[i].segment_id;
  });
  return maps;
}

std::map<std::string, int> label_map(const std::vector<FeatureRecord>& records) {
  std::map<std::string, int> labels;
  for (const auto& r : records) labels[r.segment_id] = r.scene;
  return labels;
}

std::map<std::string, int> label_map(const DatasetManifest& manifest) {
  std::map<std::string, int> labels;
  for (const auto& e : manifest.entries()) labels[e.segment_id] = e.scene;
  return labels;
}

TrainValid train_valid_records(const FeatureIndex& index, double valid_fraction,
                               std::uint64_t seed) {
  TrainValid tv{index.select(Split::kTrain), index.select(Split::kValid)};
  if (tv.train.empty()) fail(ErrorCode::kEmptyInput, "no training features in " + index.dir.string());
  if (!tv.valid.empty()) return tv;
  // Hold out original (non-augmented) segments only, stratified per class.
  std::vector<ManifestEntry> originals;
  for (const auto& r : tv.train) {
    if (r.provenance == Provenance::kOriginal) {
      originals.push_back({r.segment_id, r.file, r.scene, Split::kTrain, r.provenance});
    }
  }
  const SplitResult split =
      split_dataset(DatasetManifest(std::move(originals)), valid_fraction, seed);
  std::map<std::string, bool> held;
  for (const auto& e : split.valid.entries()) held[e.segment_id] = true;
  // Augmented mixes derived from a held-out segment would leak it.
  const auto leaks = [&](const FeatureRecord& r) {
    if (held.count(r.segment_id)) return true;
    const auto pos = r.segment_id.rfind("_aug");
    return r.provenance == Provenance::kAugmented && pos != std::string::npos &&
           held.count(r.segment_id.substr(0, pos));
  };
  TrainValid out;
  for (const auto& r : tv.train) {
    if (held.count(r.segment_id)) out.valid.push_back(r);
    else if (!leaks(r)) out.train.push_back(r);
  }
  return out;
}

TrainedNetwork train_network(Topology topology, const std::vector<FeatureMap>& train_maps,
                             const std::vector<int>& train_labels,
                             const std::vector<FeatureMap>& valid_maps,
                             const std::vector<int>& valid_labels, const Settings& settings,
                             std::uint64_t seed, std::ostream* log) {
  if (train_maps.empty() || valid_maps.empty()) {
    fail(ErrorCode::kEmptyInput, "training needs non-empty train and valid sets");
  }
  const FeatureMap& first = train_maps.front();
  Model model = build_model(topology, first.channels, first.bands, first.frames,
                            derive_seed(seed, "init"));
  if (settings.standardize) model.standardizer = fit_standardizer(train_maps);

  const auto to_set = [&](const std::vector<FeatureMap>& maps, const std::vector<int>& labels) {
    LabeledSet set;
    set.inputs.reserve(maps.size());
    for (const auto& m : maps) set.inputs.push_back(to_network_input(model, m));
    set.labels = labels;
    return set;
  };
  const LabeledSet train_set = to_set(train_maps, train_labels);
  const LabeledSet valid_set = to_set(valid_maps, valid_labels);

  TrainConfig config = settings.train;
  config.seed = seed;
  EpochCallback on_epoch;
  if (log) {
    on_epoch = [log](const EpochRecord& r) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "  epoch %3d  phase %d  lr %-8.6g train %.4f  valid %.4f  acc %5.1f%%%s\n",
                    r.epoch, r.phase, r.lr, r.train_loss, r.valid_loss, 100.0 * r.valid_acc,
                    r.improved ? "  *" : "");
      *log << buf << std::flush;
    };
  }
  TrainHistory history = train(model.net, train_set, valid_set, config, on_epoch);
  return {std::move(model), std::move(history)};
}

std::vector<int> labels_of(const std::vector<FeatureMap>& maps,
                           const std::map<std::string, int>& labels) {
  std::vector<int> out;
  out.reserve(maps.size());
  for (const auto& m : maps) {
    const auto it = labels.find(m.segment_id);
    if (it == labels.end()) fail(ErrorCode::kUnknownLabel, "no label for '" + m.segment_id + "'");
    out.push_back(it->second);
  }
  return out;
}

ScoreTable predict_table(Model& model, const std::vector<FeatureMap>& maps,
                         const std::string& system_id, int batch_size) {
  const auto scores = predict(model, maps, batch_size);
  ScoreTable table(system_id);
  for (std::size_t i = 0; i < maps.size(); ++i) {
    // Renormalize the float softmax so rows sum to 1 at double precision.
    ScoreVector s = scores[i];
    double sum = 0.0;
    for (double v : s) sum += v;
    for (double& v : s) v /= sum;
    table.add(maps[i].segment_id, s);
  }
  return table;
}

XVectorSet xvector_set(Model& model, const std::vector<FeatureMap>& maps,
                       const std::map<std::string, int>& labels, int batch_size) {
  XVectorSet set;
  set.vectors = extract_xvectors(model, maps, batch_size);
  for (const auto& m : maps) {
    set.ids.push_back(m.segment_id);
    const auto it = labels.find(m.segment_id);
    set.labels.push_back(it == labels.end() ? -1 : it->second);
  }
  return set;
}

ScoreTable cosine_table(const RldaTransform& rlda, const XVectorSet& set, double temperature,
                        const std::string& system_id, int* zero_norm) {
  if (rlda.num_classes() != kNumScenes) {
    fail(ErrorCode::kShapeMismatch, "RLDA model does not cover the ten scenes");
  }
  ScoreTable table(system_id);
  int degenerate = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const CosineScores c = cosine_scores(rlda, set.vectors[i]);
    degenerate += c.zero_norm;
    const auto p = calibrate_cosine(c.scores, temperature);
    ScoreVector row{};
    std::copy(p.begin(), p.end(), row.begin());
    table.add(set.ids[i], row);
  }
  if (zero_norm) *zero_norm = degenerate;
  return table;
}

std::string format_schedule(const TrainConfig& config) {
  std::ostringstream out;
  out << "lr schedule [";
  const auto lrs = config.lr_schedule();
  for (std::size_t i = 0; i < lrs.size(); ++i) out << (i ? ", " : "") << lrs[i];
  out << "], batch " << config.batch_size << ", max epochs " << config.max_epochs
      << ", patience " << config.patience;
  return out.str();
}

}  // namespace scene_forge::cli
