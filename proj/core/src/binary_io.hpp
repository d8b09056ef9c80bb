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

// Little-endian primitives shared by the binary file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "scene_forge/error.hpp"

namespace scene_forge::detail {

template <typename U>
void put_le(std::ostream& out, U value) {
  unsigned char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(U));
}

template <typename U>
U get_le(std::istream& in) {
  unsigned char bytes[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(U))) {
    fail(ErrorCode::kTruncatedData, "unexpected end of binary stream");
  }
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    value |= static_cast<U>(bytes[i]) << (8 * i);
  }
  return value;
}

inline void put_u8(std::ostream& out, std::uint8_t v) { put_le(out, v); }
inline void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
inline void put_f32(std::ostream& out, float v) {
  put_le(out, std::bit_cast<std::uint32_t>(v));
}
inline void put_f64(std::ostream& out, double v) {
  put_le(out, std::bit_cast<std::uint64_t>(v));
}
inline void put_string(std::ostream& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void put_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline std::uint8_t get_u8(std::istream& in) { return get_le<std::uint8_t>(in); }
inline std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
inline std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
inline float get_f32(std::istream& in) {
  return std::bit_cast<float>(get_le<std::uint32_t>(in));
}
inline double get_f64(std::istream& in) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in));
}
inline std::string get_string(std::istream& in, std::uint32_t max_len = 1u << 20) {
  const std::uint32_t n = get_u32(in);
  if (n > max_len) fail(ErrorCode::kFormat, "string length out of range");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) {
    fail(ErrorCode::kTruncatedData, "unexpected end of binary stream");
  }
  return s;
}
inline void expect_magic(std::istream& in, std::string_view magic,
                         std::string_view what) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), static_cast<std::streamsize>(magic.size())) ||
      got != magic) {
    fail(ErrorCode::kFormat,
         std::string(what) + ": bad magic, expected " + std::string(magic));
  }
}

}  // namespace scene_forge::detail
