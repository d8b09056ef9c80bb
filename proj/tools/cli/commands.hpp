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

namespace scene_forge::cli {

/// Exit statuses, one per failure class.
enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,   // a check that ran but did not pass (gradcheck)
  kExitUsage = 2,     // bad flags or configuration
  kExitIo = 3,        // missing or unwritable file
  kExitShape = 4,     // tensor or feature shape mismatch
  kExitFormat = 5,    // malformed input file or label
  kExitNumeric = 6,   // empty, degenerate or non-finite data
};

/// Parses and runs one `scene-forge` invocation. Errors become a single
/// "scene-forge: <class>: <message>" line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scene_forge::cli
