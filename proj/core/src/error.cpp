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

#include "scene_forge/error.hpp"

namespace scene_forge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kIo: return "i/o error";
    case ErrorCode::kMalformedHeader: return "malformed header";
    case ErrorCode::kUnsupportedEncoding: return "unsupported encoding";
    case ErrorCode::kTruncatedData: return "truncated data";
    case ErrorCode::kUnknownLabel: return "unknown label";
    case ErrorCode::kDuplicateSegment: return "duplicate segment";
    case ErrorCode::kShapeMismatch: return "shape mismatch";
    case ErrorCode::kEmptyInput: return "empty input";
    case ErrorCode::kClassTooSmall: return "class too small";
    case ErrorCode::kNonFinite: return "non-finite value";
    case ErrorCode::kNumerical: return "numerical failure";
    case ErrorCode::kFormat: return "format error";
    case ErrorCode::kConfig: return "bad config";
  }
  return "unknown error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      message_(message) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace scene_forge
