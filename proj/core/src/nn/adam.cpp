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

#include "scene_forge/nn/adam.hpp"

#include <cmath>

namespace scene_forge::nn {

template <typename T>
bool adam_step(std::span<Parameter<T>* const> params, AdamState<T>& state, double lr,
               const AdamConfig& config) {
  for (const auto* p : params) {
    if (!p->grad.all_finite()) return false;
  }
  if (state.first_moment.empty()) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->value.size(), T(0));
      state.second_moment.emplace_back(p->value.size(), T(0));
    }
  }
  if (state.first_moment.size() != params.size()) {
    fail(ErrorCode::kShapeMismatch, "Adam state does not match the parameter list");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i]->value.size()) {
      fail(ErrorCode::kShapeMismatch, "Adam accumulator shape mismatch for " + params[i]->name);
    }
  }

  ++state.step;
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
  const T b1 = static_cast<T>(config.beta1), b2 = static_cast<T>(config.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* w = params[i]->value.data();
    const T* g = params[i]->grad.data();
    T* m = state.first_moment[i].data();
    T* v = state.second_moment[i].data();
    for (std::size_t j = 0; j < params[i]->value.size(); ++j) {
      m[j] = b1 * m[j] + (1 - b1) * g[j];
      v[j] = b2 * v[j] + (1 - b2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      w[j] -= static_cast<T>(lr * m_hat / (std::sqrt(v_hat) + config.epsilon));
    }
  }
  return true;
}

template bool adam_step<float>(std::span<Parameter<float>* const>, AdamState<float>&, double,
                               const AdamConfig&);
template bool adam_step<double>(std::span<Parameter<double>* const>, AdamState<double>&,
                                double, const AdamConfig&);

}  // namespace scene_forge::nn
