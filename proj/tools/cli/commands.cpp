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

#include "commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <set>

#include "pipeline.hpp"
#include "scene_forge/augment.hpp"
#include "scene_forge/error.hpp"
#include "scene_forge/nn/gradcheck.hpp"
#include "scene_forge/parallel.hpp"
#include "scene_forge/synthetic.hpp"
#include "settings.hpp"
#include "stages.hpp"

namespace scene_forge::cli {
namespace {

namespace fs = std::filesystem;

// Options every subcommand accepts. Dedicated flags are appended after
// --set values so they win over both the file and --set.
struct Common {
  std::optional<std::string> config;
  std::vector<std::string> sets;
  std::optional<int> jobs;
  std::vector<std::string> flag_overrides;

  Settings settings() const {
    std::vector<std::string> overrides = sets;
    overrides.insert(overrides.end(), flag_overrides.begin(), flag_overrides.end());
    return load_settings(config ? std::optional<fs::path>(*config) : std::nullopt, overrides);
  }
  int workers() const { return resolve_jobs(jobs); }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "INI configuration file");
  cmd->add_option("--set", c.sets, "override, section.key=value (repeatable)");
  cmd->add_option("--jobs", c.jobs, "worker threads (default: SCENE_FORGE_JOBS or 1)")
      ->check(CLI::PositiveNumber);
}

// Registers a flag that becomes "key=value" in the override list.
template <typename T>
void add_key_flag(CLI::App* cmd, Common& c, const std::string& flag, const std::string& key,
                  const std::string& help) {
  cmd->add_option_function<T>(
      flag, [&c, key](const T& v) {
        std::ostringstream s;
        s << std::setprecision(17) << v;
        c.flag_overrides.push_back(key + "=" + s.str());
      },
      help + " (" + key + ")");
}

void add_seed(CLI::App* cmd, Common& c) {
  add_key_flag<std::uint64_t>(cmd, c, "--seed", "run.seed", "random seed");
}

const char* class_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
      return "bad configuration";
    case ErrorCode::kIo:
      return "missing file";
    case ErrorCode::kShapeMismatch:
      return "shape mismatch";
    case ErrorCode::kMalformedHeader:
    case ErrorCode::kUnsupportedEncoding:
    case ErrorCode::kTruncatedData:
    case ErrorCode::kFormat:
    case ErrorCode::kUnknownLabel:
    case ErrorCode::kDuplicateSegment:
      return "malformed input";
    case ErrorCode::kEmptyInput:
    case ErrorCode::kClassTooSmall:
    case ErrorCode::kNonFinite:
    case ErrorCode::kNumerical:
      return "bad data";
  }
  return "error";
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
      return kExitUsage;
    case ErrorCode::kIo:
      return kExitIo;
    case ErrorCode::kShapeMismatch:
      return kExitShape;
    case ErrorCode::kMalformedHeader:
    case ErrorCode::kUnsupportedEncoding:
    case ErrorCode::kTruncatedData:
    case ErrorCode::kFormat:
    case ErrorCode::kUnknownLabel:
    case ErrorCode::kDuplicateSegment:
      return kExitFormat;
    case ErrorCode::kEmptyInput:
    case ErrorCode::kClassTooSmall:
    case ErrorCode::kNonFinite:
    case ErrorCode::kNumerical:
      return kExitNumeric;
  }
  return kExitFailure;
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) fail(ErrorCode::kIo, "no such file: " + p.string());
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

void write_text(const fs::path& path, const std::string& text) {
  ensure_parent(path);
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

DatasetManifest read_manifest(const fs::path& p) {
  require_file(p);
  return load_manifest(p);
}

FeatureIndex read_index(const fs::path& dir) {
  require_file(dir / kFeatureIndexName);
  return load_feature_index(dir);
}

std::optional<Split> parse_split_flag(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (auto split = parse_split(s)) return split;
  fail(ErrorCode::kInvalidArgument, "unknown split '" + s + "' (train|valid|eval|all)");
}

ScoreTable subset(const ScoreTable& table, const std::map<std::string, int>& labels) {
  ScoreTable out(table.system_id(), table.space());
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (labels.count(table.ids()[i])) out.add(table.ids()[i], table.row(i));
  }
  return out;
}

// ---------------------------------------------------------------------------

struct Cli {
  CLI::App app{"Acoustic scene classification toolkit", "scene-forge"};
  std::ostream& out;
  std::function<void()> action;

  // Storage for parsed values; the subcommand callbacks read from here.
  Common common;
  std::string manifest, out_path, features_dir, ckpt, kind = "mel", mode = "m",
                                                      topology = "cnn2d", split = "all";
  std::string xvectors, labels, rlda, method = "average", dcase_root, features_root, history;
  std::vector<std::string> scores, fit_scores;
  std::string fit_labels;
  int fold = 1, seeds = 100;
  double tolerance = 1e-4;

  explicit Cli(std::ostream& o) : out(o) {
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");
    add_features();
    add_augment();
    add_train();
    add_predict();
    add_xvectors();
    add_rlda();
    add_score_cosine();
    add_fuse();
    add_evaluate();
    add_gradcheck();
    add_synthetic();
    add_pipeline();
    add_config();
  }

  CLI::App* sub(const std::string& name, const std::string& help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, common);
    return cmd;
  }

  void add_features() {
    auto* cmd = sub("features", "extract and serialize feature maps");
    cmd->add_option("--manifest", manifest, "audio manifest")->required();
    cmd->add_option("--kind", kind, "mel or cqt")->check(CLI::IsMember({"mel", "cqt"}));
    cmd->add_option("--mode", mode, "m or lrms")->check(CLI::IsMember({"m", "lrms"}));
    cmd->add_option("--out", out_path, "output directory")->required();
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        const auto m = read_manifest(manifest);
        const auto index = extract_feature_dir(m, parse_feature_kind(kind), parse_channel_mode(mode),
                                               s.features, out_path, common.workers());
        out << "wrote " << index.records.size() << " feature maps to " << out_path << '\n';
      };
    });
  }

  void add_augment() {
    auto* cmd = sub("augment", "same-scene mixing of the train split");
    cmd->add_option("--manifest", manifest, "audio manifest")->required();
    cmd->add_option("--out", out_path, "output directory")->required();
    add_seed(cmd, common);
    add_key_flag<std::uint64_t>(cmd, common, "--augment-seed", "run.seed", "alias of --seed");
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        const auto train = read_manifest(manifest).filter(Split::kTrain);
        if (train.size() == 0) fail(ErrorCode::kEmptyInput, "manifest has no train entries");
        AugmentConfig config = s.augment;
        config.jobs = common.workers();
        const auto result = augment_dataset(train, config, out_path);
        save_manifest(fs::path(out_path) / "manifest.tsv", result);
        out << "wrote " << result.size() << " entries (" << train.size() << " original) to "
            << (fs::path(out_path) / "manifest.tsv").string() << '\n';
      };
    });
  }

  void add_train() {
    auto* cmd = sub("train", "train a network on a feature directory");
    cmd->add_option("--topology", topology, "cnn2d or xvec1d")
        ->check(CLI::IsMember({"cnn2d", "xvec1d"}));
    cmd->add_option("--features", features_dir, "feature directory")->required();
    cmd->add_option("--out", ckpt, "checkpoint path")->required();
    cmd->add_option("--history", history, "history CSV (default: <out>.history.csv)");
    add_seed(cmd, common);
    add_key_flag<double>(cmd, common, "--lr", "train.initial_lr", "initial learning rate");
    add_key_flag<int>(cmd, common, "--batch-size", "train.batch_size", "minibatch size");
    add_key_flag<int>(cmd, common, "--max-epochs", "train.max_epochs", "epoch cap");
    add_key_flag<int>(cmd, common, "--patience", "train.patience", "epochs without improvement");
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        const auto index = read_index(features_dir);
        const auto parts = train_valid_records(index, s.valid_fraction, s.seed);
        const auto labels = label_map(index.records);
        const int jobs = common.workers();
        const auto train_maps = load_maps(index, parts.train, jobs);
        const auto valid_maps = load_maps(index, parts.valid, jobs);
        out << format_schedule(s.train) << '\n'
            << "train " << train_maps.size() << " segments, valid " << valid_maps.size() << '\n';
        TrainedNetwork trained = train_network(
            parse_topology(topology), train_maps, labels_of(train_maps, labels), valid_maps,
            labels_of(valid_maps, labels), s, s.seed, &out);
        ensure_parent(ckpt);
        save_model(ckpt, trained.model);
        const fs::path hist = history.empty() ? fs::path(ckpt + ".history.csv") : fs::path(history);
        trained.history.write_csv(hist);
        out << "best epoch " << trained.history.best_epoch << ", valid loss "
            << trained.history.best_valid_loss << "; wrote " << ckpt << " and " << hist.string()
            << '\n';
      };
    });
  }

  void add_predict() {
    auto* cmd = sub("predict", "softmax score table");
    cmd->add_option("--ckpt", ckpt, "checkpoint")->required();
    cmd->add_option("--features", features_dir, "feature directory")->required();
    cmd->add_option("--split", split, "train|valid|eval|all");
    cmd->add_option("--out", out_path, "score CSV")->required();
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        require_file(ckpt);
        Model model = load_model(ckpt);
        const auto index = read_index(features_dir);
        const auto maps = load_maps(index, index.select(parse_split_flag(split)), common.workers());
        const auto table =
            predict_table(model, maps, fs::path(ckpt).stem().string(), s.batch_inference);
        ensure_parent(out_path);
        write_score_csv(out_path, table);
        out << "scored " << table.size() << " segments\n";
      };
    });
  }

  void add_xvectors() {
    auto* cmd = sub("xvectors", "extract x-vector embeddings");
    cmd->add_option("--ckpt", ckpt, "xvec1d checkpoint")->required();
    cmd->add_option("--features", features_dir, "feature directory")->required();
    cmd->add_option("--split", split, "train|valid|eval|all");
    cmd->add_option("--out", out_path, "embedding file")->required();
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        require_file(ckpt);
        Model model = load_model(ckpt);
        if (model.topology != Topology::kXvec1d) {
          fail(ErrorCode::kInvalidArgument, "x-vectors need an xvec1d checkpoint");
        }
        const auto index = read_index(features_dir);
        const auto records = index.select(parse_split_flag(split));
        const auto maps = load_maps(index, records, common.workers());
        const auto set = xvector_set(model, maps, label_map(records), s.batch_inference);
        ensure_parent(out_path);
        save_xvectors(out_path, set);
        out << "wrote " << set.size() << " x-vectors of dimension " << set.dim() << '\n';
      };
    });
  }

  void add_rlda() {
    auto* cmd = sub("rlda", "fit regularized LDA on labeled x-vectors");
    cmd->add_option("--xvectors", xvectors, "embedding file")->required();
    cmd->add_option("--labels", labels, "manifest supplying labels (default: embedded)");
    cmd->add_option("--out", out_path, "transform file")->required();
    add_key_flag<double>(cmd, common, "--alpha", "rlda.alpha", "within-class regularizer");
    add_key_flag<double>(cmd, common, "--beta", "rlda.beta", "between-class regularizer");
    add_key_flag<int>(cmd, common, "--dim", "rlda.out_dim", "output dimension");
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        require_file(xvectors);
        XVectorSet set = load_xvectors(xvectors);
        if (!labels.empty()) {
          const auto map = label_map(read_manifest(labels));
          XVectorSet kept;
          for (std::size_t i = 0; i < set.size(); ++i) {
            const auto it = map.find(set.ids[i]);
            if (it == map.end()) continue;
            kept.ids.push_back(set.ids[i]);
            kept.vectors.push_back(set.vectors[i]);
            kept.labels.push_back(it->second);
          }
          set = std::move(kept);
        }
        for (int l : set.labels) {
          if (l < 0) fail(ErrorCode::kUnknownLabel, "x-vector without a label; pass --labels");
        }
        RldaConfig rc = s.rlda;
        rc.out_dim = std::min(rc.out_dim, set.dim());
        const auto transform = fit_rlda(set, rc);
        ensure_parent(out_path);
        save_rlda(out_path, transform);
        out << "fitted " << transform.projection.rows() << "x" << transform.projection.cols()
            << " projection on " << set.size() << " vectors\n";
      };
    });
  }

  void add_score_cosine() {
    auto* cmd = sub("score-cosine", "cosine scores against projected class means");
    cmd->add_option("--rlda", rlda, "transform file")->required();
    cmd->add_option("--xvectors", xvectors, "embedding file")->required();
    cmd->add_option("--out", out_path, "score CSV")->required();
    add_key_flag<double>(cmd, common, "--temperature", "rlda.temperature",
                         "softmax temperature for calibration");
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        require_file(rlda);
        require_file(xvectors);
        int zero = 0;
        const auto table = cosine_table(load_rlda(rlda), load_xvectors(xvectors),
                                        s.cosine_temperature, fs::path(out_path).stem().string(),
                                        &zero);
        ensure_parent(out_path);
        write_score_csv(out_path, table);
        out << "scored " << table.size() << " segments";
        if (zero) out << " (" << zero << " zero-norm)";
        out << '\n';
      };
    });
  }

  void add_fuse() {
    auto* cmd = sub("fuse", "combine score tables");
    cmd->add_option("--method", method, "average or logreg")
        ->check(CLI::IsMember({"average", "logreg"}));
    cmd->add_option("--scores", scores, "score CSVs to fuse")->required()->expected(1, -1);
    cmd->add_option("--fit-labels", fit_labels, "manifest with labels for logreg fitting");
    cmd->add_option("--fit-scores", fit_scores,
                    "score CSVs to fit on (default: labeled rows of --scores)")
        ->expected(1, -1);
    cmd->add_option("--out", out_path, "fused score CSV")->required();
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        std::vector<ScoreTable> tables;
        for (const auto& p : scores) {
          require_file(p);
          tables.push_back(read_score_csv(p));
        }
        ScoreTable fused;
        if (method == "average") {
          fused = average_fusion(tables);
        } else {
          if (fit_labels.empty()) fail(ErrorCode::kInvalidArgument, "logreg needs --fit-labels");
          const auto labels_map = label_map(read_manifest(fit_labels));
          std::vector<ScoreTable> fit;
          if (fit_scores.empty()) {
            for (const auto& t : tables) fit.push_back(subset(t, labels_map));
          } else {
            if (fit_scores.size() != tables.size()) {
              fail(ErrorCode::kInvalidArgument, "--fit-scores must match --scores one to one");
            }
            for (const auto& p : fit_scores) {
              require_file(p);
              fit.push_back(subset(read_score_csv(p), labels_map));
            }
          }
          LrFusionTrace trace;
          const auto model = fit_lr_fusion(fit, labels_map, s.fusion, &trace);
          fused = apply_lr_fusion(model, tables);
          out << "logreg: " << trace.iterations << " iterations, loss " << trace.losses.front()
              << " -> " << trace.losses.back() << ", weights";
          for (double w : model.weights) out << ' ' << w;
          out << '\n';
        }
        ensure_parent(out_path);
        write_score_csv(out_path, fused);
        out << "fused " << tables.size() << " systems over " << fused.size() << " segments\n";
      };
    });
  }

  void add_evaluate() {
    auto* cmd = sub("evaluate", "per-class accuracy report");
    cmd->add_option("--scores", scores, "score CSV")->required()->expected(1);
    cmd->add_option("--labels", labels, "manifest with reference labels")->required();
    cmd->add_option("--out", out_path, "report text file");
    cmd->callback([this] {
      action = [this] {
        require_file(scores.front());
        const auto table = read_score_csv(scores.front());
        const auto report = evaluate(table, label_map(read_manifest(labels)));
        const std::string text = report.to_text();
        if (!out_path.empty()) write_text(out_path, text);
        out << text;
      };
    });
  }

  void add_gradcheck() {
    auto* cmd = sub("gradcheck", "finite-difference check of every layer and both topologies");
    cmd->add_option("--seeds", seeds, "randomized cases per layer")->check(CLI::PositiveNumber);
    cmd->add_option("--tolerance", tolerance, "max relative error");
    cmd->callback([this] {
      action = [this] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto rows = nn::run_gradient_suite(seeds, tolerance);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool ok = true;
        out << std::left << std::setw(24) << "layer" << std::right << std::setw(8) << "cases"
            << std::setw(14) << "max rel err" << std::setw(9) << "skipped" << "  status\n";
        for (const auto& r : rows) {
          char err[32];
          std::snprintf(err, sizeof err, "%.3e", r.max_error);
          out << std::left << std::setw(24) << r.name << std::right << std::setw(8) << r.cases
              << std::setw(14) << err << std::setw(9) << r.skipped << "  "
              << (r.passed ? "ok" : "FAIL") << '\n';
          ok = ok && r.passed;
        }
        out << (ok ? "all layers pass" : "gradient check FAILED") << " at tolerance " << tolerance
            << " (" << std::fixed << std::setprecision(1) << secs << " s)\n";
        if (!ok) throw CLI::RuntimeError(kExitFailure);
      };
    });
  }

  void add_synthetic() {
    auto* cmd = sub("make-synthetic-corpus", "generate the labeled synthetic scene corpus");
    cmd->add_option("--out", out_path, "output directory")->required();
    add_seed(cmd, common);
    add_key_flag<int>(cmd, common, "--clips-per-class", "synthetic.clips_per_class",
                      "clips per scene");
    add_key_flag<double>(cmd, common, "--duration", "synthetic.duration_s", "clip length, s");
    cmd->callback([this] {
      action = [this] {
        const Settings s = common.settings();
        SyntheticConfig config = s.synthetic;
        config.jobs = common.workers();
        const auto m = make_synthetic_corpus(config, out_path);
        out << "wrote " << m.size() << " clips and " << (fs::path(out_path) / "manifest.tsv").string()
            << '\n';
      };
    });
  }

  void add_pipeline() {
    auto* cmd = sub("pipeline", "end-to-end training, scoring, fusion and evaluation");
    auto* src = cmd->add_option_group("source");
    src->add_option("--manifest", manifest, "manifest with train/eval splits");
    src->add_option("--dcase-root", dcase_root, "DCASE 2018 development dataset root");
    src->require_option(1);
    cmd->add_option("--fold", fold, "official fold for --dcase-root");
    cmd->add_option("--out", out_path, "output directory")->required();
    cmd->add_option("--features-root", features_root, "shared feature cache");
    add_seed(cmd, common);
    add_key_flag<std::string>(cmd, common, "--networks", "pipeline.networks",
                              "comma-separated topology:kind:mode list");
    cmd->callback([this] {
      action = [this] {
        PipelineOptions opt;
        opt.settings = common.settings();
        opt.manifest =
            dcase_root.empty() ? read_manifest(manifest) : load_dcase_fold(dcase_root, fold);
        opt.out_dir = out_path;
        if (!features_root.empty()) opt.feature_root = fs::path(features_root);
        opt.jobs = common.workers();
        opt.log = &out;
        fs::create_directories(opt.out_dir);
        write_text(opt.out_dir / "settings.ini", describe_settings(opt.settings));
        run_pipeline(opt);
      };
    });
  }

  void add_config() {
    auto* cmd = sub("config", "print the resolved configuration");
    cmd->callback([this] { action = [this] { out << describe_settings(common.settings()); }; });
  }
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Cli cli(out);
  try {
    cli.app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "scene-forge: usage: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "scene-forge: " << class_name(e.code()) << ": " << e.message() << '\n';
    return exit_code(e.code());
  }
  try {
    if (cli.action) cli.action();
    return kExitOk;
  } catch (const CLI::RuntimeError& e) {
    return e.get_exit_code();
  } catch (const Error& e) {
    err << "scene-forge: " << class_name(e.code()) << ": " << e.message() << '\n';
    return exit_code(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "scene-forge: missing file: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "scene-forge: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace scene_forge::cli
