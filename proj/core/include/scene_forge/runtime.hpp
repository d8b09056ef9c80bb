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

namespace scene_forge {

/// Keeps large tensor buffers on the heap across allocations instead of
/// mapping fresh pages for each one. Training allocates many short-lived
/// multi-megabyte tensors, and first-touch page faults otherwise dominate
/// elementwise layers. No-op outside glibc. Call once at startup.
void configure_allocator();

}  // namespace scene_forge
