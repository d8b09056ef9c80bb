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

#include "fft.hpp"

#include <map>
#include <mutex>
#include <utility>
#include <vector>

namespace scene_forge::detail {
namespace {

std::mutex planner_mutex;

fftw_plan cached_plan(int n, bool inverse) {
  static std::map<std::pair<int, bool>, fftw_plan> plans;
  std::lock_guard lock(planner_mutex);
  const auto key = std::make_pair(n, inverse);
  if (auto it = plans.find(key); it != plans.end()) return it->second;
  std::vector<double> real(n);
  std::vector<std::complex<double>> spectrum(n / 2 + 1);
  auto* c = reinterpret_cast<fftw_complex*>(spectrum.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  fftw_plan plan = inverse ? fftw_plan_dft_c2r_1d(n, c, real.data(), flags)
                           : fftw_plan_dft_r2c_1d(n, real.data(), c, flags);
  plans.emplace(key, plan);
  return plan;
}

}  // namespace

fftw_plan r2c_plan(int n) { return cached_plan(n, false); }
fftw_plan c2r_plan(int n) { return cached_plan(n, true); }

}  // namespace scene_forge::detail
