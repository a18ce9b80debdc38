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

#include "outpaint/kernels/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <type_traits>

#include "outpaint/core/errors.hpp"
#include "kernels_avx2.hpp"

namespace outpaint::kernels {

namespace scalar {

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        T* crow = c + static_cast<std::size_t>(i) * n;
        if (!accumulate) std::fill(crow, crow + n, T(0));
        const T* arow = a + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const T* brow = b + static_cast<std::size_t>(j) * k;
            T s = T(0);
            for (int p = 0; p < k; ++p) s += arow[p] * brow[p];
            T* dst = c + static_cast<std::size_t>(i) * n + j;
            *dst = accumulate ? *dst + s : s;
        }
    }
}

template <typename T>
void add(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void sub(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

template <typename T>
void scale(T alpha, T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] = alpha * x[i];
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <typename T>
T sum(const T* x, std::size_t n) {
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

template <typename T>
T sumsq(const T* x, std::size_t n) {
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

template <typename T>
T abs_diff_sum(const T* a, const T* b, std::size_t n) {
    T s = T(0);
    for (std::size_t i = 0; i < n; ++i) s += std::abs(a[i] - b[i]);
    return s;
}

template <typename T>
void leaky_relu(const T* x, T* y, std::size_t n, T slope) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : slope * x[i];
}

template <typename T>
void leaky_relu_grad(const T* x, const T* dy, T* dx, std::size_t n, T slope) {
    for (std::size_t i = 0; i < n; ++i) dx[i] = x[i] > T(0) ? dy[i] : slope * dy[i];
}

template <typename T>
void clip(const T* x, T* y, std::size_t n, T lo, T hi) {
    for (std::size_t i = 0; i < n; ++i) y[i] = std::min(std::max(x[i], lo), hi);
}

}  // namespace scalar

namespace {

bool cpu_has_avx2() {
#if OUTPAINT_HAVE_AVX2_BUILD
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend detect_initial_backend() {
    const bool supported = cpu_has_avx2();
    if (const char* env = std::getenv("OUTPAINT_KERNELS")) {
        const std::string v(env);
        if (v == "scalar") return Backend::Scalar;
        if (v == "avx2" && supported) return Backend::Avx2;
    }
    return supported ? Backend::Avx2 : Backend::Scalar;
}

Backend& backend_ref() {
    static Backend b = detect_initial_backend();
    return b;
}

inline bool use_avx2() { return backend_ref() == Backend::Avx2; }

}  // namespace

Backend active_backend() { return backend_ref(); }

bool avx2_supported() { return cpu_has_avx2(); }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Scalar: return "scalar";
        case Backend::Avx2: return "avx2";
    }
    return "unknown";
}

void set_backend(Backend b) {
    if (b == Backend::Avx2 && !cpu_has_avx2())
        throw ConfigError("kernel backend 'avx2' is not supported on this CPU");
    backend_ref() = b;
}

template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::gemm_nn_f32(a, b, c, m, n, k, accumulate);
    }
#endif
    scalar::gemm_nn(a, b, c, m, n, k, accumulate);
}

template <typename T>
void gemm_nt(const T* a, const T* b, T* c, int m, int n, int k, bool accumulate) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::gemm_nt_f32(a, b, c, m, n, k, accumulate);
    }
#endif
    scalar::gemm_nt(a, b, c, m, n, k, accumulate);
}

template <typename T>
void add(const T* a, const T* b, T* out, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::add_f32(a, b, out, n);
    }
#endif
    scalar::add(a, b, out, n);
}

template <typename T>
void sub(const T* a, const T* b, T* out, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::sub_f32(a, b, out, n);
    }
#endif
    scalar::sub(a, b, out, n);
}

template <typename T>
void mul(const T* a, const T* b, T* out, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::mul_f32(a, b, out, n);
    }
#endif
    scalar::mul(a, b, out, n);
}

template <typename T>
void axpy(T alpha, const T* x, T* y, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::axpy_f32(alpha, x, y, n);
    }
#endif
    scalar::axpy(alpha, x, y, n);
}

template <typename T>
void scale(T alpha, T* x, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::scale_f32(alpha, x, n);
    }
#endif
    scalar::scale(alpha, x, n);
}

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::dot_f32(a, b, n);
    }
#endif
    return scalar::dot(a, b, n);
}

template <typename T>
T sum(const T* x, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::sum_f32(x, n);
    }
#endif
    return scalar::sum(x, n);
}

template <typename T>
T sumsq(const T* x, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::sumsq_f32(x, n);
    }
#endif
    return scalar::sumsq(x, n);
}

template <typename T>
T abs_diff_sum(const T* a, const T* b, std::size_t n) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::abs_diff_sum_f32(a, b, n);
    }
#endif
    return scalar::abs_diff_sum(a, b, n);
}

template <typename T>
void leaky_relu(const T* x, T* y, std::size_t n, T slope) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::leaky_relu_f32(x, y, n, slope);
    }
#endif
    scalar::leaky_relu(x, y, n, slope);
}

template <typename T>
void leaky_relu_grad(const T* x, const T* dy, T* dx, std::size_t n, T slope) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::leaky_relu_grad_f32(x, dy, dx, n, slope);
    }
#endif
    scalar::leaky_relu_grad(x, dy, dx, n, slope);
}

template <typename T>
void clip(const T* x, T* y, std::size_t n, T lo, T hi) {
#if OUTPAINT_HAVE_AVX2_BUILD
    if constexpr (std::is_same_v<T, float>) {
        if (use_avx2()) return avx2::clip_f32(x, y, n, lo, hi);
    }
#endif
    scalar::clip(x, y, n, lo, hi);
}

#define OUTPAINT_INSTANTIATE_KERNELS(T)                                           \
    template void gemm_nn<T>(const T*, const T*, T*, int, int, int, bool);        \
    template void gemm_nt<T>(const T*, const T*, T*, int, int, int, bool);        \
    template void add<T>(const T*, const T*, T*, std::size_t);                    \
    template void sub<T>(const T*, const T*, T*, std::size_t);                    \
    template void mul<T>(const T*, const T*, T*, std::size_t);                    \
    template void axpy<T>(T, const T*, T*, std::size_t);                          \
    template void scale<T>(T, T*, std::size_t);                                   \
    template T dot<T>(const T*, const T*, std::size_t);                           \
    template T sum<T>(const T*, std::size_t);                                     \
    template T sumsq<T>(const T*, std::size_t);                                   \
    template T abs_diff_sum<T>(const T*, const T*, std::size_t);                  \
    template void leaky_relu<T>(const T*, T*, std::size_t, T);                    \
    template void leaky_relu_grad<T>(const T*, const T*, T*, std::size_t, T);     \
    template void clip<T>(const T*, T*, std::size_t, T, T);

OUTPAINT_INSTANTIATE_KERNELS(float)
OUTPAINT_INSTANTIATE_KERNELS(double)

#undef OUTPAINT_INSTANTIATE_KERNELS

}  // namespace outpaint::kernels
