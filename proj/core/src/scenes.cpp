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

#include "scene_forge/scenes.hpp"

#include <stdexcept>

namespace scene_forge {
namespace {

constexpr std::array<std::string_view, kNumScenes> kDisplayNames = {
    "Airport",       "Bus",           "Metro",
    "Metro Station", "Park",          "Public Square",
    "Shopping Mall", "Street Pedestrian", "Street Traffic",
    "Tram"};

}  // namespace

std::optional<int> scene_index(std::string_view label) {
  for (int i = 0; i < kNumScenes; ++i) {
    if (kSceneLabels[i] == label) return i;
  }
  return std::nullopt;
}

std::string_view scene_display_name(int index) {
  if (index < 0 || index >= kNumScenes) {
    throw std::out_of_range("scene index out of range");
  }
  return kDisplayNames[index];
}

int argmax(std::span<const double> scores) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(scores.size()); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace scene_forge
