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

#include "kernels_avx2.hpp"

#if OUTPAINT_HAVE_AVX2_BUILD

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace outpaint::kernels::avx2 {

namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 sh = _mm_movehl_ps(lo, lo);
    lo = _mm_add_ps(lo, sh);
    sh = _mm_shuffle_ps(lo, lo, 0x55);
    lo = _mm_add_ss(lo, sh);
    return _mm_cvtss_f32(lo);
}

// 4x16 block of C over the full K extent. b points at the first column of
// the strip, c at the destination block.
inline void block4x16(const float* a, const float* b, float* c, int k, int lda,
                      int ldb, int ldc, bool accumulate) {
    __m256 acc[4][2];
    for (int r = 0; r < 4; ++r) {
        if (accumulate) {
            acc[r][0] = _mm256_loadu_ps(c + r * ldc);
            acc[r][1] = _mm256_loadu_ps(c + r * ldc + 8);
        } else {
            acc[r][0] = _mm256_setzero_ps();
            acc[r][1] = _mm256_setzero_ps();
        }
    }
    for (int p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb);
        const __m256 b1 = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + 8);
        for (int r = 0; r < 4; ++r) {
            const __m256 av = _mm256_set1_ps(a[static_cast<std::size_t>(r) * lda + p]);
            acc[r][0] = _mm256_fmadd_ps(av, b0, acc[r][0]);
            acc[r][1] = _mm256_fmadd_ps(av, b1, acc[r][1]);
        }
    }
    for (int r = 0; r < 4; ++r) {
        _mm256_storeu_ps(c + r * ldc, acc[r][0]);
        _mm256_storeu_ps(c + r * ldc + 8, acc[r][1]);
    }
}

inline void block1x16(const float* a, const float* b, float* c, int k, int ldb,
                      bool accumulate) {
    __m256 a0 = accumulate ? _mm256_loadu_ps(c) : _mm256_setzero_ps();
    __m256 a1 = accumulate ? _mm256_loadu_ps(c + 8) : _mm256_setzero_ps();
    for (int p = 0; p < k; ++p) {
        const __m256 av = _mm256_set1_ps(a[p]);
        a0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb), a0);
        a1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + 8), a1);
    }
    _mm256_storeu_ps(c, a0);
    _mm256_storeu_ps(c + 8, a1);
}

inline void block1x8(const float* a, const float* b, float* c, int k, int ldb,
                     bool accumulate) {
    __m256 acc = accumulate ? _mm256_loadu_ps(c) : _mm256_setzero_ps();
    for (int p = 0; p < k; ++p) {
        const __m256 av = _mm256_set1_ps(a[p]);
        acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb), acc);
    }
    _mm256_storeu_ps(c, acc);
}

}  // namespace

void gemm_nn_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate) {
    constexpr int kTile = 480;  // B panel of kTile columns stays cache resident
    for (int j0 = 0; j0 < n; j0 += kTile) {
        const int nb = std::min(kTile, n - j0);
        int i = 0;
        for (; i + 4 <= m; i += 4) {
            const float* arow = a + static_cast<std::size_t>(i) * k;
            float* crow = c + static_cast<std::size_t>(i) * n + j0;
            int j = 0;
            for (; j + 16 <= nb; j += 16)
                block4x16(arow, b + j0 + j, crow + j, k, k, n, n, accumulate);
            for (int r = 0; r < 4; ++r) {
                const float* ar = arow + static_cast<std::size_t>(r) * k;
                float* cr = crow + static_cast<std::size_t>(r) * n;
                int jj = j;
                for (; jj + 8 <= nb; jj += 8) block1x8(ar, b + j0 + jj, cr + jj, k, n, accumulate);
                for (; jj < nb; ++jj) {
                    float s = accumulate ? cr[jj] : 0.0f;
                    for (int p = 0; p < k; ++p)
                        s += ar[p] * b[static_cast<std::size_t>(p) * n + j0 + jj];
                    cr[jj] = s;
                }
            }
        }
        for (; i < m; ++i) {
            const float* ar = a + static_cast<std::size_t>(i) * k;
            float* cr = c + static_cast<std::size_t>(i) * n + j0;
            int j = 0;
            for (; j + 16 <= nb; j += 16) block1x16(ar, b + j0 + j, cr + j, k, n, accumulate);
            for (; j + 8 <= nb; j += 8) block1x8(ar, b + j0 + j, cr + j, k, n, accumulate);
            for (; j < nb; ++j) {
                float s = accumulate ? cr[j] : 0.0f;
                for (int p = 0; p < k; ++p)
                    s += ar[p] * b[static_cast<std::size_t>(p) * n + j0 + j];
                cr[j] = s;
            }
        }
    }
}

void gemm_nt_f32(const float* a, const float* b, float* c, int m, int n, int k,
                 bool accumulate) {
    const int k8 = k & ~7;
    int i = 0;
    for (; i + 2 <= m; i += 2) {
        const float* a0 = a + static_cast<std::size_t>(i) * k;
        const float* a1 = a0 + k;
        int j = 0;
        for (; j + 4 <= n; j += 4) {
            __m256 acc[2][4];
            for (int r = 0; r < 2; ++r)
                for (int s = 0; s < 4; ++s) acc[r][s] = _mm256_setzero_ps();
            for (int p = 0; p < k8; p += 8) {
                const __m256 va0 = _mm256_loadu_ps(a0 + p);
                const __m256 va1 = _mm256_loadu_ps(a1 + p);
                for (int s = 0; s < 4; ++s) {
                    const __m256 vb = _mm256_loadu_ps(b + static_cast<std::size_t>(j + s) * k + p);
                    acc[0][s] = _mm256_fmadd_ps(va0, vb, acc[0][s]);
                    acc[1][s] = _mm256_fmadd_ps(va1, vb, acc[1][s]);
                }
            }
            for (int r = 0; r < 2; ++r) {
                const float* ar = r == 0 ? a0 : a1;
                for (int s = 0; s < 4; ++s) {
                    float val = hsum(acc[r][s]);
                    const float* br = b + static_cast<std::size_t>(j + s) * k;
                    for (int p = k8; p < k; ++p) val += ar[p] * br[p];
                    float* dst = c + static_cast<std::size_t>(i + r) * n + j + s;
                    *dst = accumulate ? *dst + val : val;
                }
            }
        }
        for (; j < n; ++j) {
            const float* br = b + static_cast<std::size_t>(j) * k;
            for (int r = 0; r < 2; ++r) {
                const float* ar = r == 0 ? a0 : a1;
                float val = dot_f32(ar, br, static_cast<std::size_t>(k));
                float* dst = c + static_cast<std::size_t>(i + r) * n + j;
                *dst = accumulate ? *dst + val : val;
            }
        }
    }
    for (; i < m; ++i) {
        const float* ar = a + static_cast<std::size_t>(i) * k;
        for (int j = 0; j < n; ++j) {
            const float val = dot_f32(ar, b + static_cast<std::size_t>(j) * k,
                                      static_cast<std::size_t>(k));
            float* dst = c + static_cast<std::size_t>(i) * n + j;
            *dst = accumulate ? *dst + val : val;
        }
    }
}

void add_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_f32(const float* a, const float* b, float* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void axpy_f32(float alpha, const float* x, float* y, std::size_t n) {
    // mul + add kept separate so results match the scalar reference bitwise
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 prod = _mm256_mul_ps(va, _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
    }
    for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_f32(float alpha, float* x, std::size_t n) {
    const __m256 va = _mm256_set1_ps(alpha);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(x + i, _mm256_mul_ps(va, _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) x[i] = alpha * x[i];
}

float dot_f32(const float* a, const float* b, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
    float s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

float sum_f32(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float sumsq_f32(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        acc = _mm256_fmadd_ps(v, v, acc);
    }
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

float abs_diff_sum_f32(const float* a, const float* b, std::size_t n) {
    const __m256 sign_mask = _mm256_set1_ps(-0.0f);
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
        acc = _mm256_add_ps(acc, _mm256_andnot_ps(sign_mask, d));
    }
    float s = hsum(acc);
    for (; i < n; ++i) s += std::fabs(a[i] - b[i]);
    return s;
}

void leaky_relu_f32(const float* x, float* y, std::size_t n, float slope) {
    const __m256 vs = _mm256_set1_ps(slope);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 neg = _mm256_mul_ps(vs, v);
        const __m256 pos_mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(y + i, _mm256_blendv_ps(neg, v, pos_mask));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : slope * x[i];
}

void leaky_relu_grad_f32(const float* x, const float* dy, float* dx,
                         std::size_t n, float slope) {
    const __m256 vs = _mm256_set1_ps(slope);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        const __m256 g = _mm256_loadu_ps(dy + i);
        const __m256 neg = _mm256_mul_ps(vs, g);
        const __m256 pos_mask = _mm256_cmp_ps(v, zero, _CMP_GT_OQ);
        _mm256_storeu_ps(dx + i, _mm256_blendv_ps(neg, g, pos_mask));
    }
    for (; i < n; ++i) dx[i] = x[i] > 0.0f ? dy[i] : slope * dy[i];
}

void clip_f32(const float* x, float* y, std::size_t n, float lo, float hi) {
    const __m256 vlo = _mm256_set1_ps(lo);
    const __m256 vhi = _mm256_set1_ps(hi);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 v = _mm256_loadu_ps(x + i);
        _mm256_storeu_ps(y + i, _mm256_min_ps(_mm256_max_ps(v, vlo), vhi));
    }
    for (; i < n; ++i) y[i] = std::min(std::max(x[i], lo), hi);
}

}  // namespace outpaint::kernels::avx2

#endif  // OUTPAINT_HAVE_AVX2_BUILD
