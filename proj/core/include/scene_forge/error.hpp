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

#include <stdexcept>
#include <string>
#include <string_view>

namespace scene_forge {

/// Failure classes surfaced by the library. The CLI maps these onto exit
/// codes, so a new value needs a matching entry there.
enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kMalformedHeader,
  kUnsupportedEncoding,
  kTruncatedData,
  kUnknownLabel,
  kDuplicateSegment,
  kShapeMismatch,
  kEmptyInput,
  kClassTooSmall,
  kNonFinite,
  kNumerical,
  kFormat,
  kConfig,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-class prefix carried by what().
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace scene_forge
