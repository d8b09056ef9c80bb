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

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "scene_forge/nn/layers.hpp"

namespace scene_forge::nn {

/// Sequential stack of layers over a fixed per-sample input shape.
template <typename T>
class Network {
 public:
  static constexpr std::size_t kAll = std::numeric_limits<std::size_t>::max();

  Network(Shape sample_input, const std::vector<LayerSpec>& specs, std::uint64_t seed);

  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const;
  std::size_t num_layers() const { return layers_.size(); }
  Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  const Layer<T>& layer(std::size_t i) const { return *layers_.at(i); }

  /// Specs with build-time values resolved (e.g. whole-axis pool widths).
  std::vector<LayerSpec> resolved_specs() const;

  /// Input shape followed by every layer's output shape.
  std::vector<Shape> shape_trace() const;

  /// Runs layers [0, end). Inference mode disables dropout and uses
  /// batch-norm running statistics.
  Tensor<T> forward(const Tensor<T>& batch, bool training, std::size_t end = kAll);

  /// Back-propagates through layers [0, end) in reverse, accumulating
  /// parameter gradients. Requires a preceding forward over the same range.
  void backward(const Tensor<T>& grad, std::size_t end = kAll);

  /// Index one past the last layer before a trailing Softmax.
  std::size_t logits_end() const;

  std::vector<Parameter<T>*> parameters();
  std::vector<Tensor<T>*> buffers();
  std::size_t parameter_count() const;
  void zero_grad();

  void reseed_dropout(std::uint64_t seed);
  void freeze_dropout_masks(bool frozen);

  /// Copies of every parameter and buffer value, in a stable order.
  std::vector<Tensor<T>> snapshot();
  void restore(const std::vector<Tensor<T>>& state);

 private:
  Shape input_shape_;
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace scene_forge::nn
