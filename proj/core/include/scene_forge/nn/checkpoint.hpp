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

#include <iosfwd>

#include "scene_forge/nn/network.hpp"

namespace scene_forge::nn {

/// Topology descriptor (input shape, resolved layer specs) followed by every
/// parameter and running statistic as little-endian 64-bit floats.
void write_network(std::ostream& out, Network<float>& net);

/// Rebuilds the network from its descriptor and loads the stored values.
Network<float> read_network(std::istream& in);

}  // namespace scene_forge::nn
