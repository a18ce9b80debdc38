// Copyright 2026 The Outpaint Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>

// AVX2 float kernels. Defined in kernels_avx2.cpp, which is the only
// translation unit compiled with -mavx2 -mfma; callers must gate on the
// runtime CPU check in the dispatch layer.

namespace outpaint::kernels::avx2 {

#if defined(__x86_64__) || defined(_M_X64)
#define OUTPAINT_HAVE_AVX2_BUILD 1

void gemm_nn_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate);
void gemm_nt_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate);
void add_f32(const float* a, const float* b, float* out, std::size_t n);
void sub_f32(const float* a, const float* b, float* out, std::size_t n);
void mul_f32(const float* a, const float* b, float* out, std::size_t n);
void axpy_f32(float alpha, const float* x, float* y, std::size_t n);
void scale_f32(float alpha, float* x, std::size_t n);
float dot_f32(const float* a, const float* b, std::size_t n);
float sum_f32(const float* x, std::size_t n);
float sumsq_f32(const float* x, std::size_t n);
float abs_diff_sum_f32(const float* a, const float* b, std::size_t n);
void leaky_relu_f32(const float* x, float* y, std::size_t n, float slope);
void leaky_relu_grad_f32(const float* x, const float* dy, float* dx,
                         std::size_t n, float slope);
void clip_f32(const float* x, float* y, std::size_t n, float lo, float hi);

#else
#define OUTPAINT_HAVE_AVX2_BUILD 0
#endif

}  // namespace outpaint::kernels::avx2
