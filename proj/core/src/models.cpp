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

#include "scene_forge/models.hpp"

#include <fstream>

#include "binary_io.hpp"
#include "scene_forge/error.hpp"
#include "scene_forge/nn/checkpoint.hpp"

namespace scene_forge {
namespace {

using nn::LayerSpec;

constexpr std::uint32_t kCheckpointVersion = 1;

std::size_t find_xvector_layer(const nn::Network<float>& net) {
  for (std::size_t i = 0; i + 1 < net.num_layers(); ++i) {
    if (net.layer(i).spec().kind == nn::LayerKind::kStatsPool &&
        net.layer(i + 1).spec().kind == nn::LayerKind::kDense) {
      return i + 1;
    }
  }
  fail(ErrorCode::kInvalidArgument, "network has no statistics-pooling x-vector layer");
}

template <typename Fn>
void for_batches(std::size_t n, int batch_size, Fn&& fn) {
  if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch size must be positive");
  for (std::size_t start = 0; start < n; start += batch_size) {
    fn(start, std::min(n, start + static_cast<std::size_t>(batch_size)));
  }
}

nn::Tensor<float> stack(std::span<const nn::Tensor<float>> inputs, std::size_t begin,
                        std::size_t end, const nn::Shape& sample) {
  nn::Tensor<float> batch(nn::batched(static_cast<int>(end - begin), sample));
  const std::size_t stride = nn::shape_size(sample);
  for (std::size_t i = begin; i < end; ++i) {
    if (inputs[i].shape() != sample) {
      fail(ErrorCode::kShapeMismatch, "input " + nn::shape_string(inputs[i].shape()) +
                                          " does not match model input " +
                                          nn::shape_string(sample));
    }
    std::copy(inputs[i].values().begin(), inputs[i].values().end(),
              batch.data() + (i - begin) * stride);
  }
  return batch;
}

std::vector<nn::Tensor<float>> inputs_for(const Model& model, std::span<const FeatureMap> maps) {
  std::vector<nn::Tensor<float>> inputs;
  inputs.reserve(maps.size());
  for (const auto& m : maps) inputs.push_back(to_network_input(model, m));
  return inputs;
}

}  // namespace

std::string to_string(Topology topology) {
  return topology == Topology::kCnn2d ? "cnn2d" : "xvec1d";
}

Topology parse_topology(const std::string& text) {
  if (text == "cnn2d") return Topology::kCnn2d;
  if (text == "xvec1d") return Topology::kXvec1d;
  fail(ErrorCode::kInvalidArgument, "unknown topology '" + text + "'");
}

std::vector<LayerSpec> topology_layers(Topology topology) {
  if (topology == Topology::kCnn2d) {
    std::vector<LayerSpec> s;
    const int filters[] = {32, 64, 128};
    const std::pair<int, int> pools[] = {{2, 10}, {2, 5}, {5, 0}};
    for (int b = 0; b < 3; ++b) {
      s.insert(s.end(), {LayerSpec::conv2d(filters[b], 7, 11), LayerSpec::batch_norm(),
                         LayerSpec::relu(), LayerSpec::max_pool2d(pools[b].first, pools[b].second),
                         LayerSpec::dropout(0.3)});
    }
    s.insert(s.end(), {LayerSpec::global_avg_pool2d(), LayerSpec::batch_norm(),
                       LayerSpec::dense(kNumScenes), LayerSpec::softmax()});
    return s;
  }
  // Frame-level part, activation before batch norm as in the x-vector table.
  std::vector<LayerSpec> s;
  const int kernels[] = {3, 3, 5, 1, 1};
  const int filters[] = {128, 128, 128, 128, 256};
  for (int b = 0; b < 5; ++b) {
    s.insert(s.end(), {LayerSpec::conv1d(filters[b], kernels[b]), LayerSpec::relu(),
                       LayerSpec::batch_norm()});
    if (b < 4) s.push_back(LayerSpec::dropout(0.15));
  }
  s.insert(s.end(), {LayerSpec::stats_pool(),
                     LayerSpec::dense(128), LayerSpec::relu(), LayerSpec::batch_norm(),
                     LayerSpec::dropout(0.15),
                     LayerSpec::dense(128), LayerSpec::relu(), LayerSpec::batch_norm(),
                     LayerSpec::dense(kNumScenes), LayerSpec::softmax()});
  return s;
}

std::size_t Model::xvector_layer() const {
  if (topology != Topology::kXvec1d) {
    fail(ErrorCode::kInvalidArgument, "x-vectors come from the xvec1d topology only");
  }
  return find_xvector_layer(net);
}

Model build_model(Topology topology, int input_channels, int bands, int frames,
                  std::uint64_t seed) {
  if (input_channels != 1 && input_channels != 4) {
    fail(ErrorCode::kInvalidArgument, "input must have 1 or 4 channels");
  }
  if (topology == Topology::kXvec1d && input_channels != 1) {
    fail(ErrorCode::kInvalidArgument, "xvec1d consumes single-channel features only");
  }
  const nn::Shape input = topology == Topology::kCnn2d ? nn::Shape{input_channels, bands, frames}
                                                       : nn::Shape{bands, frames};
  Model model{topology, input_channels, bands, frames,
              nn::Network<float>(input, topology_layers(topology), seed), std::nullopt};
  // Shape trace on a dummy batch of two; the result must be 10 posteriors.
  nn::Tensor<float> dummy(nn::batched(2, input));
  const nn::Tensor<float> out = model.net.forward(dummy, false);
  if (out.shape() != nn::Shape{2, kNumScenes}) {
    fail(ErrorCode::kShapeMismatch, "model output " + nn::shape_string(out.shape()));
  }
  return model;
}

nn::Tensor<float> to_network_input(const Model& model, const FeatureMap& map) {
  if (map.bands != model.bands || map.channels != model.input_channels) {
    fail(ErrorCode::kShapeMismatch,
         "features " + std::to_string(map.bands) + "x" + std::to_string(map.frames) + "x" +
             std::to_string(map.channels) + " do not fit a " + to_string(model.topology) +
             " model expecting " + std::to_string(model.bands) + " bands and " +
             std::to_string(model.input_channels) + " channels");
  }
  if (map.frames != model.frames) {
    fail(ErrorCode::kShapeMismatch, to_string(model.topology) + " model expects " + std::to_string(model.frames) +
                                        " frames, got " + std::to_string(map.frames));
  }
  std::optional<FeatureMap> standardized;
  if (model.standardizer) standardized = apply_standardizer(*model.standardizer, map);
  const FeatureMap& m = standardized ? *standardized : map;

  const int c = map.channels;
  nn::Tensor<float> t(model.topology == Topology::kCnn2d ? nn::Shape{c, m.bands, m.frames}
                                                         : nn::Shape{m.bands, m.frames});
  for (int ch = 0; ch < c; ++ch)
    for (int b = 0; b < m.bands; ++b)
      for (int f = 0; f < m.frames; ++f) {
        t[(static_cast<std::size_t>(ch) * m.bands + b) * m.frames + f] = m.at(b, f, ch);
      }
  return t;
}

std::vector<ScoreVector> predict_inputs(Model& model, std::span<const nn::Tensor<float>> inputs,
                                        int batch_size) {
  std::vector<ScoreVector> scores(inputs.size());
  for_batches(inputs.size(), batch_size, [&](std::size_t b, std::size_t e) {
    const nn::Tensor<float> out =
        model.net.forward(stack(inputs, b, e, model.net.input_shape()), false);
    for (std::size_t i = b; i < e; ++i)
      for (int k = 0; k < kNumScenes; ++k) scores[i][k] = out[(i - b) * kNumScenes + k];
  });
  return scores;
}

ScoreVector predict(Model& model, const FeatureMap& map) {
  return predict(model, std::span<const FeatureMap>(&map, 1)).front();
}

std::vector<ScoreVector> predict(Model& model, std::span<const FeatureMap> maps, int batch_size) {
  const auto inputs = inputs_for(model, maps);
  return predict_inputs(model, inputs, batch_size);
}

std::vector<std::vector<double>> extract_xvectors_from_inputs(
    Model& model, std::span<const nn::Tensor<float>> inputs, int batch_size) {
  const std::size_t tap = model.xvector_layer();
  std::vector<std::vector<double>> vecs(inputs.size());
  for_batches(inputs.size(), batch_size, [&](std::size_t b, std::size_t e) {
    const nn::Tensor<float> out =
        model.net.forward(stack(inputs, b, e, model.net.input_shape()), false, tap + 1);
    const int dim = out.dim(1);
    for (std::size_t i = b; i < e; ++i) {
      vecs[i].assign(out.data() + (i - b) * dim, out.data() + (i - b + 1) * dim);
    }
  });
  return vecs;
}

std::vector<double> extract_xvector(Model& model, const FeatureMap& map) {
  return extract_xvectors(model, std::span<const FeatureMap>(&map, 1)).front();
}

std::vector<std::vector<double>> extract_xvectors(Model& model, std::span<const FeatureMap> maps,
                                                  int batch_size) {
  const auto inputs = inputs_for(model, maps);
  return extract_xvectors_from_inputs(model, inputs, batch_size);
}

void save_model(const std::filesystem::path& path, Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  using namespace detail;
  put_magic(out, "SNN1");
  put_u32(out, kCheckpointVersion);
  put_u8(out, static_cast<std::uint8_t>(model.topology));
  put_u32(out, static_cast<std::uint32_t>(model.input_channels));
  put_u32(out, static_cast<std::uint32_t>(model.bands));
  put_u32(out, static_cast<std::uint32_t>(model.frames));
  nn::write_network(out, model.net);
  put_u8(out, model.standardizer ? 1 : 0);
  if (model.standardizer) {
    const auto& s = *model.standardizer;
    put_u32(out, static_cast<std::uint32_t>(s.bands));
    put_u32(out, static_cast<std::uint32_t>(s.channels));
    for (double v : s.mean) put_f64(out, v);
    for (double v : s.std) put_f64(out, v);
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path.string());
  using namespace detail;
  expect_magic(in, "SNN1", path.string());
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) {
    fail(ErrorCode::kFormat, path.string() + ": unsupported checkpoint version " +
                                 std::to_string(version));
  }
  const std::uint8_t topo = get_u8(in);
  if (topo > 1) fail(ErrorCode::kFormat, "unknown topology in checkpoint");
  const int channels = static_cast<int>(get_u32(in));
  const int bands = static_cast<int>(get_u32(in));
  const int frames = static_cast<int>(get_u32(in));
  Model model{static_cast<Topology>(topo), channels, bands, frames, nn::read_network(in),
              std::nullopt};
  if (get_u8(in)) {
    StandardizerStats s;
    s.bands = static_cast<int>(get_u32(in));
    s.channels = static_cast<int>(get_u32(in));
    if (s.bands != bands || s.channels != channels) {
      fail(ErrorCode::kFormat, "standardizer shape does not match the model");
    }
    s.mean.resize(static_cast<std::size_t>(s.bands) * s.channels);
    s.std.resize(s.mean.size());
    for (auto& v : s.mean) v = get_f64(in);
    for (auto& v : s.std) v = get_f64(in);
    model.standardizer = std::move(s);
  }
  return model;
}

}  // namespace scene_forge
