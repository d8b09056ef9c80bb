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
#include <span>
#include <vector>

#include "scene_forge/nn/layers.hpp"

namespace scene_forge::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators, one per parameter tensor, allocated on first use.
template <typename T>
struct AdamState {
  std::int64_t step = 0;
  std::vector<std::vector<T>> first_moment;
  std::vector<std::vector<T>> second_moment;
};

/// Bias-corrected Adam update. Returns false and leaves parameters and
/// state untouched when any gradient is non-finite.
template <typename T>
bool adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr,
               const AdamConfig& config = {});

}  // namespace scene_forge::nn
