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

#include "scene_forge/nn/checkpoint.hpp"

#include <istream>
#include <ostream>

#include "binary_io.hpp"

namespace scene_forge::nn {
namespace {

using namespace scene_forge::detail;

void write_tensor(std::ostream& out, const Tensor<float>& t) {
  put_u32(out, static_cast<std::uint32_t>(t.rank()));
  for (int d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
  for (float v : t.values()) put_f64(out, v);
}

void read_tensor_into(std::istream& in, Tensor<float>& t) {
  const std::uint32_t rank = get_u32(in);
  Shape shape(rank);
  for (auto& d : shape) d = static_cast<int>(get_u32(in));
  if (shape != t.shape()) {
    fail(ErrorCode::kShapeMismatch, "checkpoint tensor " + shape_string(shape) +
                                        " does not match " + shape_string(t.shape()));
  }
  for (auto& v : t.values()) v = static_cast<float>(get_f64(in));
}

}  // namespace

void write_network(std::ostream& out, Network<float>& net) {
  put_u32(out, static_cast<std::uint32_t>(net.input_shape().size()));
  for (int d : net.input_shape()) put_u32(out, static_cast<std::uint32_t>(d));
  const auto specs = net.resolved_specs();
  put_u32(out, static_cast<std::uint32_t>(specs.size()));
  for (const auto& s : specs) {
    put_u8(out, static_cast<std::uint8_t>(s.kind));
    for (int v : {s.units, s.kernel_h, s.kernel_w, s.pool_h, s.pool_w}) {
      put_u32(out, static_cast<std::uint32_t>(v));
    }
    put_f64(out, s.drop_prob);
  }
  const auto params = net.parameters();
  put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) write_tensor(out, p->value);
  const auto bufs = net.buffers();
  put_u32(out, static_cast<std::uint32_t>(bufs.size()));
  for (const auto* b : bufs) write_tensor(out, *b);
}

Network<float> read_network(std::istream& in) {
  const std::uint32_t rank = get_u32(in);
  if (rank == 0 || rank > 4) fail(ErrorCode::kFormat, "bad input rank in checkpoint");
  Shape input(rank);
  for (auto& d : input) d = static_cast<int>(get_u32(in));
  const std::uint32_t count = get_u32(in);
  if (count > 4096) fail(ErrorCode::kFormat, "implausible layer count in checkpoint");
  std::vector<LayerSpec> specs(count);
  for (auto& s : specs) {
    const std::uint8_t kind = get_u8(in);
    if (kind > static_cast<std::uint8_t>(LayerKind::kStatsPool)) {
      fail(ErrorCode::kFormat, "unknown layer kind in checkpoint");
    }
    s.kind = static_cast<LayerKind>(kind);
    for (int* v : {&s.units, &s.kernel_h, &s.kernel_w, &s.pool_h, &s.pool_w}) {
      *v = static_cast<int>(get_u32(in));
    }
    s.drop_prob = get_f64(in);
  }
  Network<float> net(input, specs, 0);
  auto params = net.parameters();
  if (get_u32(in) != params.size()) fail(ErrorCode::kFormat, "parameter count mismatch");
  for (auto* p : params) read_tensor_into(in, p->value);
  auto bufs = net.buffers();
  if (get_u32(in) != bufs.size()) fail(ErrorCode::kFormat, "buffer count mismatch");
  for (auto* b : bufs) read_tensor_into(in, *b);
  return net;
}

}  // namespace scene_forge::nn
