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

#include "scene_forge/nn/network.hpp"

namespace scene_forge::nn {

template <typename T>
Network<T>::Network(Shape sample_input, const std::vector<LayerSpec>& specs,
                    std::uint64_t seed)
    : input_shape_(std::move(sample_input)) {
  Rng rng(seed);
  Shape shape = input_shape_;
  for (const auto& spec : specs) {
    layers_.push_back(make_layer<T>(spec, shape, rng));
    shape = layers_.back()->output_shape();
  }
  if (!layers_.empty()) layers_.front()->set_input_grad_enabled(false);
}

template <typename T>
const Shape& Network<T>::output_shape() const {
  return layers_.empty() ? input_shape_ : layers_.back()->output_shape();
}

template <typename T>
std::vector<LayerSpec> Network<T>::resolved_specs() const {
  std::vector<LayerSpec> specs;
  for (const auto& l : layers_) specs.push_back(l->spec());
  return specs;
}

template <typename T>
std::vector<Shape> Network<T>::shape_trace() const {
  std::vector<Shape> trace{input_shape_};
  for (const auto& l : layers_) trace.push_back(l->output_shape());
  return trace;
}

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& batch, bool training, std::size_t end) {
  end = std::min(end, layers_.size());
  if (end == 0) return batch;
  Tensor<T> x = layers_[0]->forward(batch, training);
  for (std::size_t i = 1; i < end; ++i) x = layers_[i]->forward(x, training);
  return x;
}

template <typename T>
void Network<T>::backward(const Tensor<T>& grad, std::size_t end) {
  end = std::min(end, layers_.size());
  Tensor<T> g = grad;
  for (std::size_t i = end; i-- > 0;) g = layers_[i]->backward(g);
}

template <typename T>
std::size_t Network<T>::logits_end() const {
  if (!layers_.empty() && layers_.back()->spec().kind == LayerKind::kSoftmax) {
    return layers_.size() - 1;
  }
  return layers_.size();
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  std::vector<Parameter<T>*> all;
  for (auto& l : layers_)
    for (auto* p : l->parameters()) all.push_back(p);
  return all;
}

template <typename T>
std::vector<Tensor<T>*> Network<T>::buffers() {
  std::vector<Tensor<T>*> all;
  for (auto& l : layers_)
    for (auto* b : l->buffers()) all.push_back(b);
  return all;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_)
    for (auto* p : const_cast<Layer<T>&>(*l).parameters()) n += p->value.size();
  return n;
}

template <typename T>
void Network<T>::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(T(0));
}

template <typename T>
void Network<T>::reseed_dropout(std::uint64_t seed) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->reseed(splitmix64(seed + i));
  }
}

template <typename T>
void Network<T>::freeze_dropout_masks(bool frozen) {
  for (auto& l : layers_) l->set_mask_frozen(frozen);
}

template <typename T>
std::vector<Tensor<T>> Network<T>::snapshot() {
  std::vector<Tensor<T>> state;
  for (auto* p : parameters()) state.push_back(p->value);
  for (auto* b : buffers()) state.push_back(*b);
  return state;
}

template <typename T>
void Network<T>::restore(const std::vector<Tensor<T>>& state) {
  auto params = parameters();
  auto bufs = buffers();
  if (state.size() != params.size() + bufs.size()) {
    fail(ErrorCode::kShapeMismatch, "snapshot does not match network");
  }
  std::size_t i = 0;
  for (auto* p : params) {
    if (state[i].shape() != p->value.shape()) {
      fail(ErrorCode::kShapeMismatch, "snapshot tensor shape mismatch");
    }
    p->value = state[i++];
  }
  for (auto* b : bufs) {
    if (state[i].shape() != b->shape()) {
      fail(ErrorCode::kShapeMismatch, "snapshot tensor shape mismatch");
    }
    *b = state[i++];
  }
}

template class Network<float>;
template class Network<double>;

}  // namespace scene_forge::nn
