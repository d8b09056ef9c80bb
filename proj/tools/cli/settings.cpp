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

#include "settings.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <sstream>

#include "scene_forge/error.hpp"

namespace scene_forge::cli {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  fail(ErrorCode::kConfig, "invalid value '" + value + "' for " + key);
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, text);
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string v = trim(text);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, text);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "" : ", ") + i;
  return out;
}

std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip
  return std::string(buf, res.ptr);
}

struct Entry {
  const char* key;
  std::function<void(Settings&, const std::string&, const std::string&)> set;
  std::function<std::string(const Settings&)> get;
};

#define SF_DOUBLE(k, field)                                                              \
  Entry{k, [](Settings& s, const std::string& key, const std::string& v) {               \
          s.field = parse_number<double>(key, v);                                        \
        },                                                                               \
        [](const Settings& s) { return fmt(s.field); }}
#define SF_INT(k, field)                                                                 \
  Entry{k, [](Settings& s, const std::string& key, const std::string& v) {               \
          s.field = parse_number<int>(key, v);                                           \
        },                                                                               \
        [](const Settings& s) { return std::to_string(s.field); }}
#define SF_BOOL(k, field)                                                                \
  Entry{k, [](Settings& s, const std::string& key, const std::string& v) {               \
          s.field = parse_bool(key, v);                                                  \
        },                                                                               \
        [](const Settings& s) { return std::string(s.field ? "true" : "false"); }}

const std::vector<Entry>& table() {
  static const std::vector<Entry> entries = {
      SF_DOUBLE("features.window_ms", features.window_ms),
      SF_DOUBLE("features.hop_ms", features.hop_ms),
      SF_INT("features.fft_size", features.fft_size),
      SF_INT("features.num_bands", features.num_bands),
      SF_DOUBLE("features.log_floor", features.log_floor),
      SF_DOUBLE("features.cqt_fmin", features.cqt_fmin),
      SF_INT("features.cqt_bins_per_octave", features.cqt_bins_per_octave),
      SF_BOOL("features.standardize", standardize),
      SF_DOUBLE("train.initial_lr", train.initial_lr),
      SF_INT("train.patience", train.patience),
      SF_INT("train.lr_phases", train.lr_phases),
      SF_INT("train.max_epochs", train.max_epochs),
      SF_INT("train.batch_size", train.batch_size),
      SF_DOUBLE("train.improvement_tolerance", train.improvement_tolerance),
      SF_DOUBLE("train.valid_fraction", valid_fraction),
      SF_INT("train.inference_batch", batch_inference),
      SF_INT("augment.clips_per_segment", augment.clips_per_segment),
      SF_INT("augment.min_partners", augment.min_partners),
      SF_INT("augment.max_partners", augment.max_partners),
      SF_DOUBLE("augment.primary_weight_min", augment.primary_weight_min),
      SF_DOUBLE("augment.primary_weight_max", augment.primary_weight_max),
      SF_INT("rlda.out_dim", rlda.out_dim),
      SF_DOUBLE("rlda.alpha", rlda.alpha),
      SF_DOUBLE("rlda.beta", rlda.beta),
      SF_DOUBLE("rlda.temperature", cosine_temperature),
      SF_DOUBLE("fusion.lr", fusion.lr),
      SF_DOUBLE("fusion.fallback_lr", fusion.fallback_lr),
      SF_INT("fusion.iterations", fusion.iterations),
      SF_DOUBLE("fusion.gradient_tolerance", fusion.gradient_tolerance),
      SF_INT("synthetic.clips_per_class", synthetic.clips_per_class),
      SF_DOUBLE("synthetic.duration_s", synthetic.duration_s),
      SF_INT("synthetic.sample_rate", synthetic.sample_rate),
      SF_DOUBLE("synthetic.tone_dropout", synthetic.tone_dropout),
      SF_DOUBLE("synthetic.band_dropout", synthetic.band_dropout),
      SF_DOUBLE("synthetic.background_db", synthetic.background_db),
      SF_DOUBLE("synthetic.pitch_jitter", synthetic.pitch_jitter),
      SF_DOUBLE("synthetic.valid_fraction", synthetic.valid_fraction),
      SF_DOUBLE("synthetic.eval_fraction", synthetic.eval_fraction),
      Entry{"pipeline.networks",
            [](Settings& s, const std::string&, const std::string& v) {
              s.pipeline.networks.clear();
              for (const auto& item : split_list(v)) {
                s.pipeline.networks.push_back(NetworkSpec::parse(item));
              }
            },
            [](const Settings& s) {
              std::vector<std::string> items;
              for (const auto& n : s.pipeline.networks) {
                items.push_back(to_string(n.topology) + ":" + to_string(n.kind) + ":" +
                                to_string(n.mode));
              }
              return join(items);
            }},
      Entry{"pipeline.xvector_outputs",
            [](Settings& s, const std::string& key, const std::string& v) {
              s.pipeline.xvector_softmax = s.pipeline.xvector_cosine = false;
              for (const auto& item : split_list(v)) {
                if (item == "softmax") s.pipeline.xvector_softmax = true;
                else if (item == "cosine") s.pipeline.xvector_cosine = true;
                else bad_value(key, v);
              }
            },
            [](const Settings& s) {
              std::vector<std::string> items;
              if (s.pipeline.xvector_softmax) items.emplace_back("softmax");
              if (s.pipeline.xvector_cosine) items.emplace_back("cosine");
              return join(items);
            }},
      SF_BOOL("pipeline.augment", pipeline.augment),
      Entry{"run.seed",
            [](Settings& s, const std::string& key, const std::string& v) {
              s.seed = parse_number<std::uint64_t>(key, v);
            },
            [](const Settings& s) { return std::to_string(s.seed); }},
  };
  return entries;
}

#undef SF_DOUBLE
#undef SF_INT
#undef SF_BOOL

}  // namespace

std::string NetworkSpec::name() const {
  return to_string(topology) + "-" + to_string(kind) + "-" + to_string(mode);
}

NetworkSpec NetworkSpec::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::istringstream in(text);
  std::string p;
  while (std::getline(in, p, ':')) parts.push_back(trim(p));
  if (parts.size() != 3) {
    fail(ErrorCode::kConfig, "network '" + text + "' is not topology:kind:mode");
  }
  try {
    NetworkSpec spec{parse_topology(parts[0]), parse_feature_kind(parts[1]),
                     parse_channel_mode(parts[2])};
    if (spec.topology == Topology::kXvec1d && spec.mode != ChannelMode::kMono) {
      fail(ErrorCode::kConfig, "xvec1d networks take single-channel features");
    }
    return spec;
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, "network '" + text + "': " + e.message());
  }
}

Settings::Settings() {
  pipeline.networks = {NetworkSpec::parse("cnn2d:mel:m"),  NetworkSpec::parse("cnn2d:mel:lrms"),
                       NetworkSpec::parse("xvec1d:mel:m"), NetworkSpec::parse("cnn2d:cqt:m"),
                       NetworkSpec::parse("cnn2d:cqt:lrms"), NetworkSpec::parse("xvec1d:cqt:m")};
}

void apply_setting(Settings& settings, const std::string& key, const std::string& value) {
  for (const auto& e : table()) {
    if (key == e.key) {
      e.set(settings, key, value);
      return;
    }
  }
  fail(ErrorCode::kConfig, "unknown setting '" + key + "'");
}

std::vector<std::string> setting_keys() {
  std::vector<std::string> keys;
  for (const auto& e : table()) keys.emplace_back(e.key);
  return keys;
}

Settings load_settings(const std::optional<std::filesystem::path>& file,
                       const std::vector<std::string>& overrides) {
  Settings s;
  if (file) {
    if (!std::filesystem::exists(*file)) fail(ErrorCode::kIo, "config not found: " + file->string());
    boost::property_tree::ptree tree;
    try {
      boost::property_tree::read_ini(file->string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorCode::kConfig, file->string() + ": " + e.message() + " (line " +
                                   std::to_string(e.line()) + ")");
    }
    for (const auto& [section, body] : tree) {
      if (!body.data().empty()) {
        fail(ErrorCode::kConfig, file->string() + ": key '" + section + "' outside a section");
      }
      for (const auto& [key, value] : body) {
        apply_setting(s, section + "." + key, value.data());
      }
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kConfig, "override '" + o + "' is not key=value");
    apply_setting(s, trim(o.substr(0, eq)), o.substr(eq + 1));
  }
  s.train.seed = s.seed;
  s.augment.seed = s.seed;
  s.synthetic.seed = s.seed;
  s.train.validate();
  return s;
}

std::string describe_settings(const Settings& settings) {
  std::ostringstream out;
  std::string section;
  for (const auto& e : table()) {
    const std::string key = e.key;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out << (out.tellp() > 0 ? "\n" : "") << '[' << section << "]\n";
    }
    out << key.substr(dot + 1) << " = " << e.get(settings) << '\n';
  }
  return out.str();
}

}  // namespace scene_forge::cli
