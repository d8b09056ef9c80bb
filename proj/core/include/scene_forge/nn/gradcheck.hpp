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
#include <string>
#include <vector>

#include "scene_forge/nn/network.hpp"

namespace scene_forge::nn {

/// Central finite differences against the analytic backward pass, in double
/// precision, for the scalar loss sum(r * y) with a random r.
///
/// Errors are elementwise relative, |a - n| / max(|a|, |n|, 1e-3 * s), where
/// s is the largest analytic magnitude in the same tensor; the floor keeps
/// entries that are zero up to rounding from dominating the report.
struct GradCheckReport {
  std::string label;
  Shape input_shape;          // batched
  double input_error = 0.0;
  double param_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t skipped = 0;    // coordinates straddling a kink (network checks only)

  double max_error() const { return input_error > param_error ? input_error : param_error; }
  bool passed(double tolerance) const { return max_error() < tolerance; }
};

double max_relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Checks a single layer built from `spec` on `input` (batched). Parameters
/// are randomized; dropout runs in training mode with a frozen mask.
GradCheckReport grad_check(const LayerSpec& spec, const Tensor<double>& input,
                           std::uint64_t seed, double step = 1e-5);

/// Whole-network check in training mode with frozen dropout masks.
/// Coordinates whose one-sided differences disagree by more than
/// `kink_tolerance` (a ReLU or max-pool switch inside the stencil) are
/// skipped and counted.
GradCheckReport grad_check_network(Network<double>& net, const Tensor<double>& input,
                                   std::uint64_t seed, double step = 1e-5,
                                   double kink_tolerance = 1e-7);

struct GradSuiteRow {
  std::string name;
  int cases = 0;
  double max_error = 0.0;
  std::size_t skipped = 0;
  bool passed = false;
};

/// Randomized per-layer checks for every layer kind used by the two
/// topologies (`seeds` cases each), plus toy-sized whole-network checks.
std::vector<GradSuiteRow> run_gradient_suite(int seeds = 100, double tolerance = 1e-4);

}  // namespace scene_forge::nn
