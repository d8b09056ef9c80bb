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

#include <fftw3.h>

#include <complex>
#include <span>

namespace scene_forge::detail {

// Cached FFTW_ESTIMATE | FFTW_UNALIGNED plans for the new-array execute
// interface. Planning is serialized; execution is thread-safe.
fftw_plan r2c_plan(int n);
fftw_plan c2r_plan(int n);

// Unnormalized real-to-complex transform: out has n/2 + 1 entries.
inline void forward_real(fftw_plan plan, double* in, std::complex<double>* out) {
  fftw_execute_dft_r2c(plan, in, reinterpret_cast<fftw_complex*>(out));
}

// Unnormalized inverse; destroys `in`.
inline void inverse_real(fftw_plan plan, std::complex<double>* in, double* out) {
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace scene_forge::detail
