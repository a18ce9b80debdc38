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

namespace outpaint::kernels {

// Arithmetic inner loops used by the convolution, normalization and loss
// code. Every entry point has a scalar reference implementation; the float
// overloads are routed through a dispatch table that selects an AVX2 variant
// at runtime when the CPU supports it. The elementwise kernels are exact
// (bitwise identical across backends); the matrix and reduction kernels may
// reassociate and are equivalence-tested against the scalar reference at a
// tolerance.

enum class Backend { Scalar, Avx2 };

Backend active_backend();
void set_backend(Backend b);  // throws ConfigError if unsupported on this CPU
bool avx2_supported();
const char* backend_name(Backend b);

// C (m x n) = A (m x k) * B (k x n), all row-major. Adds into C when
// `accumulate` is set, otherwise overwrites.
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k,
             bool accumulate = false);

// C (m x n) = A (m x k) * B^T with B stored row-major as (n x k).
template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k,
             bool accumulate = false);

template <typename T> void add(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void sub(const T* a, const T* b, T* out, std::size_t n);
template <typename T> void mul(const T* a, const T* b, T* out, std::size_t n);

// y += alpha * x
template <typename T> void axpy(T alpha, const T* x, T* y, std::size_t n);
template <typename T> void scale(T alpha, T* x, std::size_t n);

template <typename T> T dot(const T* a, const T* b, std::size_t n);
template <typename T> T sum(const T* x, std::size_t n);
template <typename T> T sumsq(const T* x, std::size_t n);
template <typename T> T abs_diff_sum(const T* a, const T* b, std::size_t n);

template <typename T> void leaky_relu(const T* x, T* y, std::size_t n, T slope);
// dx = dy * (x > 0 ? 1 : slope)
template <typename T>
void leaky_relu_grad(const T* x, const T* dy, T* dx, std::size_t n, T slope);

template <typename T>
void clip(const T* x, T* y, std::size_t n, T lo, T hi);

}  // namespace outpaint::kernels
