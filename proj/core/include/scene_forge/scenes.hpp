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

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace scene_forge {

inline constexpr int kNumScenes = 10;

/// Canonical scene labels in class-index order. Score files and manifests
/// use these spellings.
inline constexpr std::array<std::string_view, kNumScenes> kSceneLabels = {
    "airport",       "bus",           "metro",
    "metro_station", "park",          "public_square",
    "shopping_mall", "street_pedestrian", "street_traffic",
    "tram"};

std::optional<int> scene_index(std::string_view label);

/// Human-readable name used in evaluation reports ("Metro Station").
std::string_view scene_display_name(int index);

/// Index of the largest entry; ties resolve to the lowest index.
int argmax(std::span<const double> scores);

}  // namespace scene_forge
