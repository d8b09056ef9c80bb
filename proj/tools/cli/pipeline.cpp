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

#include "pipeline.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <set>

#include "scene_forge/augment.hpp"
#include "scene_forge/error.hpp"
#include "scene_forge/random.hpp"
#include "stages.hpp"

namespace scene_forge::cli {
namespace {

namespace fs = std::filesystem;

struct Logger {
  std::ostream* out;
  template <typename... Args>
  void operator()(const Args&... args) const {
    if (!out) return;
    ((*out) << ... << args) << '\n' << std::flush;
  }
};

std::string percent(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * v);
  return buf;
}

// Final split assignment: originals keep their split (valid carved from
// train when missing) and augmented mixes join train.
DatasetManifest working_manifest(const PipelineOptions& opt, const Logger& log) {
  const Settings& s = opt.settings;
  std::vector<ManifestEntry> entries = opt.manifest.entries();
  const auto count = [&](Split sp) {
    return std::count_if(entries.begin(), entries.end(),
                         [&](const ManifestEntry& e) { return e.split == sp; });
  };
  if (count(Split::kEval) == 0) fail(ErrorCode::kEmptyInput, "manifest has no eval segments");
  if (count(Split::kTrain) == 0) fail(ErrorCode::kEmptyInput, "manifest has no train segments");
  if (count(Split::kValid) == 0) {
    const SplitResult split = split_dataset(opt.manifest.filter(Split::kTrain), s.valid_fraction,
                                            derive_seed(s.seed, "valid-split"));
    std::set<std::string> held;
    for (const auto& e : split.valid.entries()) held.insert(e.segment_id);
    for (auto& e : entries) {
      if (held.count(e.segment_id)) e.split = Split::kValid;
    }
    log("held out ", held.size(), " training segments for validation");
  }
  if (s.pipeline.augment) {
    std::vector<ManifestEntry> train;
    for (const auto& e : entries) {
      if (e.split == Split::kTrain) train.push_back(e);
    }
    AugmentConfig ac = s.augment;
    ac.seed = s.seed;
    ac.jobs = opt.jobs;
    const DatasetManifest augmented =
        augment_dataset(DatasetManifest(std::move(train)), ac, opt.out_dir / "augmented");
    std::size_t added = 0;
    for (const auto& e : augmented.entries()) {
      if (e.provenance == Provenance::kAugmented) {
        entries.push_back(e);
        ++added;
      }
    }
    log("augmented training data with ", added, " mixtures");
  }
  return DatasetManifest(std::move(entries));
}

bool index_matches(const FeatureIndex& index, const DatasetManifest& manifest) {
  if (index.records.size() != manifest.size()) return false;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& r = index.records[i];
    const auto& e = manifest[i];
    if (r.segment_id != e.segment_id || r.scene != e.scene || r.split != e.split ||
        r.provenance != e.provenance || !fs::exists(index.dir / r.file)) {
      return false;
    }
  }
  return true;
}

FeatureIndex features_for(const PipelineOptions& opt, const DatasetManifest& manifest,
                          FeatureKind kind, ChannelMode mode, const Logger& log) {
  const fs::path root = opt.feature_root.value_or(opt.out_dir / "features");
  const fs::path dir = root / (to_string(kind) + "-" + to_string(mode));
  if (fs::exists(dir / kFeatureIndexName)) {
    FeatureIndex index = load_feature_index(dir);
    if (index_matches(index, manifest)) {
      log("reusing features in ", dir.string());
      return index;
    }
  }
  log("extracting ", to_string(kind), "/", to_string(mode), " features for ", manifest.size(),
      " segments");
  return extract_feature_dir(manifest, kind, mode, opt.settings.features, dir, opt.jobs);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

struct SystemTables {
  std::string name;
  ScoreTable valid;
  ScoreTable eval;
};

}  // namespace

const SystemResult& PipelineResult::get(const std::string& name) const {
  if (average.name == name) return average;
  if (logreg && logreg->name == name) return *logreg;
  for (const auto& s : systems) {
    if (s.name == name) return s;
  }
  fail(ErrorCode::kInvalidArgument, "no system named '" + name + "'");
}

PipelineResult run_pipeline(const PipelineOptions& opt) {
  const Logger log{opt.log};
  const Settings& s = opt.settings;
  if (s.pipeline.networks.empty()) fail(ErrorCode::kConfig, "no networks configured");
  for (const char* sub : {"models", "scores", "reports"}) fs::create_directories(opt.out_dir / sub);

  const DatasetManifest manifest = working_manifest(opt, log);
  const auto labels = label_map(manifest);
  std::vector<SystemTables> systems;

  for (const NetworkSpec& net : s.pipeline.networks) {
    const FeatureIndex index = features_for(opt, manifest, net.kind, net.mode, log);
    std::vector<FeatureRecord> train_orig, train_aug;
    for (const auto& r : index.select(Split::kTrain)) {
      (r.provenance == Provenance::kOriginal ? train_orig : train_aug).push_back(r);
    }
    const auto valid_maps = load_maps(index, index.select(Split::kValid), opt.jobs);
    const auto eval_maps = load_maps(index, index.select(Split::kEval), opt.jobs);
    const auto valid_labels = labels_of(valid_maps, labels);

    std::vector<std::pair<std::string, std::vector<FeatureRecord>>> scenarios = {{"", train_orig}};
    if (s.pipeline.augment) {
      auto all = train_orig;
      all.insert(all.end(), train_aug.begin(), train_aug.end());
      scenarios.emplace_back("+aug", std::move(all));
    }
    for (const auto& [suffix, records] : scenarios) {
      const std::string name = net.name() + suffix;
      const auto train_maps = load_maps(index, records, opt.jobs);
      const auto train_labels = labels_of(train_maps, labels);
      log("training ", name, " on ", train_maps.size(), " segments (",
          format_schedule(s.train), ")");
      const auto t0 = std::chrono::steady_clock::now();
      TrainedNetwork trained =
          train_network(net.topology, train_maps, train_labels, valid_maps, valid_labels, s,
                        derive_seed(s.seed, name), opt.log);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log("  best epoch ", trained.history.best_epoch, ", valid loss ",
          trained.history.best_valid_loss, ", ", static_cast<int>(secs), " s");
      save_model(opt.out_dir / "models" / (name + ".snn"), trained.model);
      trained.history.write_csv(opt.out_dir / "models" / (name + ".history.csv"));

      Model& model = trained.model;
      const bool softmax = net.topology == Topology::kCnn2d || s.pipeline.xvector_softmax;
      if (softmax) {
        systems.push_back({name, predict_table(model, valid_maps, name, s.batch_inference),
                           predict_table(model, eval_maps, name, s.batch_inference)});
      }
      if (net.topology == Topology::kXvec1d && s.pipeline.xvector_cosine) {
        const std::string cos = net.name() + "-cos" + suffix;
        const XVectorSet train_x = xvector_set(model, train_maps, labels, s.batch_inference);
        const XVectorSet valid_x = xvector_set(model, valid_maps, labels, s.batch_inference);
        const XVectorSet eval_x = xvector_set(model, eval_maps, labels, s.batch_inference);
        RldaConfig rc = s.rlda;
        rc.out_dim = std::min(rc.out_dim, train_x.dim());
        const RldaTransform rlda = fit_rlda(train_x, rc);
        save_rlda(opt.out_dir / "models" / (cos + ".rlda"), rlda);
        save_xvectors(opt.out_dir / "models" / (name + ".eval.xvc"), eval_x);
        int degenerate = 0;
        systems.push_back({cos, cosine_table(rlda, valid_x, s.cosine_temperature, cos),
                           cosine_table(rlda, eval_x, s.cosine_temperature, cos, &degenerate)});
        if (degenerate) log("  warning: ", degenerate, " zero-norm projected x-vectors");
      }
    }
  }

  PipelineResult result;
  std::vector<ScoreTable> valid_tables, eval_tables;
  for (const auto& sys : systems) {
    write_score_csv(opt.out_dir / "scores" / (sys.name + ".valid.csv"), sys.valid);
    write_score_csv(opt.out_dir / "scores" / (sys.name + ".eval.csv"), sys.eval);
    valid_tables.push_back(sys.valid);
    eval_tables.push_back(sys.eval);
    result.systems.push_back({sys.name, evaluate(sys.eval, labels)});
  }

  const ScoreTable averaged = average_fusion(eval_tables);
  write_score_csv(opt.out_dir / "scores" / "fusion-average.eval.csv", averaged);
  result.average = {"fusion-average", evaluate(averaged, labels)};

  LrFusionTrace trace;
  const FusionModel lr = fit_lr_fusion(valid_tables, labels, s.fusion, &trace);
  const ScoreTable lr_fused = apply_lr_fusion(lr, eval_tables);
  write_score_csv(opt.out_dir / "scores" / "fusion-logreg.eval.csv", lr_fused);
  result.logreg = SystemResult{"fusion-logreg", evaluate(lr_fused, labels)};

  std::string summary = "system\taccuracy\n";
  std::vector<const SystemResult*> all;
  for (const auto& r : result.systems) all.push_back(&r);
  all.push_back(&result.average);
  all.push_back(&*result.logreg);
  log("\nheld-out accuracy");
  for (const SystemResult* r : all) {
    write_text(opt.out_dir / "reports" / (r->name + ".txt"), r->report.to_text());
    write_text(opt.out_dir / "reports" / (r->name + ".csv"), r->report.to_csv());
    char line[128];
    std::snprintf(line, sizeof line, "%.6f", r->report.overall_accuracy);
    summary += r->name + "\t" + line + "\n";
    std::snprintf(line, sizeof line, "  %-28s %s", r->name.c_str(),
                  percent(r->report.overall_accuracy).c_str());
    log(line);
  }
  write_text(opt.out_dir / "summary.tsv", summary);
  log("\n", result.average.report.to_text());
  return result;
}

DatasetManifest load_dcase_fold(const fs::path& root, int fold) {
  const fs::path setup = root / "evaluation_setup";
  const std::string stem = "fold" + std::to_string(fold);
  std::vector<ManifestEntry> entries;
  for (const auto& [file, split] :
       {std::pair{stem + "_train.txt", Split::kTrain}, {stem + "_evaluate.txt", Split::kEval}}) {
    const DatasetManifest part = load_manifest(setup / file);
    for (ManifestEntry e : part.entries()) {
      // Fold lists are relative to the dataset root, not to evaluation_setup/.
      const fs::path rel = e.audio_path.lexically_relative(setup.lexically_normal());
      if (!rel.empty() && *rel.begin() != "..") e.audio_path = root / rel;
      e.split = split;
      entries.push_back(std::move(e));
    }
  }
  return DatasetManifest(std::move(entries));
}

}  // namespace scene_forge::cli
