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
#include <memory>
#include <string>
#include <vector>

#include "scene_forge/nn/tensor.hpp"
#include "scene_forge/random.hpp"

namespace scene_forge::nn {

enum class LayerKind : std::uint8_t {
  kConv2D = 0,
  kConv1D = 1,
  kBatchNorm = 2,
  kReLU = 3,
  kMaxPool2D = 4,
  kDropout = 5,
  kGlobalAvgPool2D = 6,
  kDense = 7,
  kSoftmax = 8,
  kStatsPool = 9,
};

std::string to_string(LayerKind kind);

/// Configuration of one layer. Input sizes are not part of the spec; they
/// are inferred from the shape flowing into the layer.
struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  int units = 0;      // conv filters or dense outputs
  int kernel_h = 1;
  int kernel_w = 1;   // Conv1D kernel length lives here
  int pool_h = 1;
  int pool_w = 1;     // 0: span the whole time axis, resolved at build time
  double drop_prob = 0.0;

  static LayerSpec conv2d(int filters, int kernel_h, int kernel_w);
  static LayerSpec conv1d(int filters, int kernel);
  static LayerSpec batch_norm();
  static LayerSpec relu();
  static LayerSpec max_pool2d(int pool_h, int pool_w);
  static LayerSpec dropout(double p);
  static LayerSpec global_avg_pool2d();
  static LayerSpec dense(int units);
  static LayerSpec softmax();
  static LayerSpec stats_pool();

  void validate() const;
  std::string describe() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
};

/// A layer with a fixed per-sample input shape. forward() caches whatever
/// backward() needs; backward() accumulates parameter gradients and returns
/// the gradient with respect to the input.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  const LayerSpec& spec() const { return spec_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }

  virtual Tensor<T> forward(const Tensor<T>& x, bool training) = 0;
  virtual Tensor<T> backward(const Tensor<T>& dy) = 0;

  virtual std::vector<Parameter<T>*> parameters() { return {}; }
  /// Non-trainable state (batch-norm running statistics).
  virtual std::vector<Tensor<T>*> buffers() { return {}; }

  /// The first layer of a network never needs its input gradient.
  void set_input_grad_enabled(bool enabled) { input_grad_ = enabled; }
  /// Dropout only: reuse the previous mask instead of drawing a new one.
  virtual void set_mask_frozen(bool) {}
  virtual void reseed(std::uint64_t) {}

 protected:
  Layer(LayerSpec spec, Shape input_shape, Shape output_shape)
      : spec_(spec), input_shape_(std::move(input_shape)),
        output_shape_(std::move(output_shape)) {}

  /// Returns the batch size after checking the sample shape.
  int check_input(const Tensor<T>& x) const;

  LayerSpec spec_;
  Shape input_shape_;
  Shape output_shape_;
  bool input_grad_ = true;
};

/// Output shape of `spec` applied to a per-sample input shape; throws
/// kShapeMismatch when the layer cannot accept it.
Shape infer_output_shape(const LayerSpec& spec, const Shape& input);

/// Builds a layer with He-uniform weights (conv, dense), zero biases and
/// unit/zero batch-norm scale/shift.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, const Shape& input,
                                     Rng& init_rng);

inline constexpr double kBatchNormEpsilon = 1e-3;
inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kStatsPoolVarianceFloor = 1e-10;

/// Row-wise softmax with max subtraction.
template <typename T>
void softmax_rows(const T* logits, T* probs, int rows, int cols);

/// -log(probs[label]); throws on a label outside [0, probs.size()).
double cross_entropy(std::span<const double> probs, int label);

}  // namespace scene_forge::nn
