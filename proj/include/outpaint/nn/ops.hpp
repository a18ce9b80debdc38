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

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

#include "outpaint/core/errors.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/kernels/kernels.hpp"

// Neural network building blocks shared by the generator and discriminator.
// Everything is templated on the scalar type: training runs in float, the
// finite-difference gradient checks run the same code in double.
//
// Conventions:
//   feature maps   (C, H, W), row-major
//   conv weights   (out_ch, in_ch * k * k), one matrixized row per filter
//   conv biases    (out_ch)
//   fc weights     (out_dim, in_dim)

namespace outpaint::nn {

enum class Padding { Same, Valid };

struct ConvGeom {
    int kernel = 3;
    int stride = 1;
    int dilation = 1;
    Padding padding = Padding::Same;
};

// Output extent of one spatial axis. 'Same' keeps ceil(in/stride) regardless
// of kernel; 'Valid' requires the effective kernel to fit.
inline int conv_out_size(int in, const ConvGeom& g) {
    const int eff = (g.kernel - 1) * g.dilation + 1;
    if (g.padding == Padding::Same) return (in + g.stride - 1) / g.stride;
    if (in < eff) throw ShapeError("conv: input smaller than the effective kernel");
    return (in - eff) / g.stride + 1;
}

// Leading padding for 'Same'; any odd leftover pixel pads the bottom/right.
inline int same_pad_begin(int in, const ConvGeom& g) {
    const int out = (in + g.stride - 1) / g.stride;
    const int eff = (g.kernel - 1) * g.dilation + 1;
    const int total = std::max((out - 1) * g.stride + eff - in, 0);
    return total / 2;
}

// Unfolds x (C, H, W) into a (C*k*k, outH*outW) matrix whose row index is
// (c*k + ky)*k + kx. Out-of-bounds taps contribute zero.
template <typename T>
Tensor<T> im2col(const Tensor<T>& x, const ConvGeom& g, int* out_h_ptr = nullptr,
                 int* out_w_ptr = nullptr) {
    if (x.rank() != 3) throw ShapeError("im2col: input must be (C, H, W)");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const int oh = conv_out_size(h, g), ow = conv_out_size(w, g);
    const int pad_y = g.padding == Padding::Same ? same_pad_begin(h, g) : 0;
    const int pad_x = g.padding == Padding::Same ? same_pad_begin(w, g) : 0;
    if (out_h_ptr) *out_h_ptr = oh;
    if (out_w_ptr) *out_w_ptr = ow;

    Tensor<T> cols({c * g.kernel * g.kernel, oh * ow});
    const std::int64_t n = static_cast<std::int64_t>(oh) * ow;
    for (int ch = 0; ch < c; ++ch) {
        const T* plane = x.data() + static_cast<std::int64_t>(ch) * h * w;
        for (int ky = 0; ky < g.kernel; ++ky) {
            for (int kx = 0; kx < g.kernel; ++kx) {
                T* row = cols.data() +
                         static_cast<std::int64_t>((ch * g.kernel + ky) * g.kernel + kx) * n;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * g.stride - pad_y + ky * g.dilation;
                    T* dst = row + static_cast<std::int64_t>(oy) * ow;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst, dst + ow, T(0));
                        continue;
                    }
                    const T* src = plane + static_cast<std::int64_t>(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * g.stride - pad_x + kx * g.dilation;
                        dst[ox] = (ix >= 0 && ix < w) ? src[ix] : T(0);
                    }
                }
            }
        }
    }
    return cols;
}

// Adjoint of im2col: folds column gradients back onto an input-shaped map.
template <typename T>
Tensor<T> col2im(const Tensor<T>& cols, int c, int h, int w, const ConvGeom& g) {
    const int oh = conv_out_size(h, g), ow = conv_out_size(w, g);
    const int pad_y = g.padding == Padding::Same ? same_pad_begin(h, g) : 0;
    const int pad_x = g.padding == Padding::Same ? same_pad_begin(w, g) : 0;
    if (cols.dim(0) != c * g.kernel * g.kernel || cols.dim(1) != oh * ow)
        throw ShapeError("col2im: column matrix does not match the geometry");

    Tensor<T> dx({c, h, w});
    const std::int64_t n = static_cast<std::int64_t>(oh) * ow;
    for (int ch = 0; ch < c; ++ch) {
        T* plane = dx.data() + static_cast<std::int64_t>(ch) * h * w;
        for (int ky = 0; ky < g.kernel; ++ky) {
            for (int kx = 0; kx < g.kernel; ++kx) {
                const T* row = cols.data() +
                               static_cast<std::int64_t>((ch * g.kernel + ky) * g.kernel + kx) * n;
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * g.stride - pad_y + ky * g.dilation;
                    if (iy < 0 || iy >= h) continue;
                    const T* src = row + static_cast<std::int64_t>(oy) * ow;
                    T* dst = plane + static_cast<std::int64_t>(iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * g.stride - pad_x + kx * g.dilation;
                        if (ix >= 0 && ix < w) dst[ix] += src[ox];
                    }
                }
            }
        }
    }
    return dx;
}

// y = W * im2col(x) + b. W is (out_ch, in_ch*k*k); b may be null.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w,
                 const std::type_identity_t<Tensor<T>>* b, const ConvGeom& g) {
    const int in_ch = x.dim(0);
    if (w.rank() != 2 || w.dim(1) != in_ch * g.kernel * g.kernel)
        throw ShapeError("conv2d: weight shape does not match input channels");
    const int out_ch = w.dim(0);
    int oh = 0, ow = 0;
    const Tensor<T> cols = im2col(x, g, &oh, &ow);
    Tensor<T> y({out_ch, oh, ow});
    const int n = oh * ow;
    kernels::gemm_nn(w.data(), cols.data(), y.data(), out_ch, n, w.dim(1), false);
    if (b) {
        if (b->size() != out_ch) throw ShapeError("conv2d: bias size mismatch");
        for (int o = 0; o < out_ch; ++o) {
            T* row = y.data() + static_cast<std::int64_t>(o) * n;
            const T bo = (*b)[o];
            for (int i = 0; i < n; ++i) row[i] += bo;
        }
    }
    return y;
}

// Gradients of conv2d. dy is (out_ch, oh, ow). dw/db are accumulated into
// (callers zero them at the start of a batch); dx is written fresh when
// requested.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const ConvGeom& g,
                     const Tensor<T>& dy, std::type_identity_t<Tensor<T>>* dx,
                     std::type_identity_t<Tensor<T>>* dw,
                     std::type_identity_t<Tensor<T>>* db) {
    const int in_ch = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int out_ch = w.dim(0);
    const int kk = w.dim(1);
    int oh = 0, ow = 0;
    const Tensor<T> cols = im2col(x, g, &oh, &ow);
    if (dy.dim(0) != out_ch || dy.dim(1) != oh || dy.dim(2) != ow)
        throw ShapeError("conv2d_backward: upstream gradient shape mismatch");
    const int n = oh * ow;

    if (db) {
        for (int o = 0; o < out_ch; ++o)
            (*db)[o] += kernels::sum(dy.data() + static_cast<std::int64_t>(o) * n,
                                     static_cast<std::size_t>(n));
    }
    if (dw) {
        // dW (out_ch, kk) += dy (out_ch, n) * cols^T, cols stored (kk, n).
        kernels::gemm_nt(dy.data(), cols.data(), dw->data(), out_ch, kk, n, true);
    }
    if (dx) {
        // dcols = W^T dy; W^T materialized once per call.
        Tensor<T> wt({kk, out_ch});
        for (int o = 0; o < out_ch; ++o)
            for (int i = 0; i < kk; ++i)
                wt.at(i, o) = w[static_cast<std::int64_t>(o) * kk + i];
        Tensor<T> dcols({kk, n});
        kernels::gemm_nn(wt.data(), dy.data(), dcols.data(), kk, n, out_ch, false);
        *dx = col2im(dcols, in_ch, h, wd, g);
    }
}

// --------------------------------------------------------------------------
// Activations. ELU and sigmoid run scalar std::exp on every element; their
// gradients are recovered from the cached outputs.
// --------------------------------------------------------------------------

template <typename T>
Tensor<T> elu(const Tensor<T>& x, T alpha) {
    Tensor<T> y(x.dims());
    for (std::int64_t i = 0; i < x.size(); ++i)
        y[i] = x[i] > T(0) ? x[i] : alpha * (std::exp(x[i]) - T(1));
    return y;
}

// dx = dy * elu'(x), with elu'(x) = 1 for x > 0 and elu(x) + alpha otherwise
// (continuous at 0 where both sides equal 1).
template <typename T>
Tensor<T> elu_backward(const Tensor<T>& y, const Tensor<T>& dy, T alpha) {
    Tensor<T> dx(y.dims());
    for (std::int64_t i = 0; i < y.size(); ++i)
        dx[i] = y[i] > T(0) ? dy[i] : dy[i] * (y[i] + alpha);
    return dx;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    Tensor<T> y(x.dims());
    for (std::int64_t i = 0; i < x.size(); ++i) {
        // Branch on sign for numerical stability at large |x|.
        const T v = x[i];
        if (v >= T(0)) {
            const T e = std::exp(-v);
            y[i] = T(1) / (T(1) + e);
        } else {
            const T e = std::exp(v);
            y[i] = e / (T(1) + e);
        }
    }
    return y;
}

template <typename T>
Tensor<T> sigmoid_backward(const Tensor<T>& y, const Tensor<T>& dy) {
    Tensor<T> dx(y.dims());
    for (std::int64_t i = 0; i < y.size(); ++i) dx[i] = dy[i] * y[i] * (T(1) - y[i]);
    return dx;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, T slope) {
    Tensor<T> y(x.dims());
    kernels::leaky_relu(x.data(), y.data(), static_cast<std::size_t>(x.size()), slope);
    return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& dy, T slope) {
    Tensor<T> dx(x.dims());
    kernels::leaky_relu_grad(x.data(), dy.data(), dx.data(),
                             static_cast<std::size_t>(x.size()), slope);
    return dx;
}

// Hard clip with zero gradient outside the open interval (lo, hi).
template <typename T>
Tensor<T> hard_clip(const Tensor<T>& x, T lo, T hi) {
    Tensor<T> y(x.dims());
    kernels::clip(x.data(), y.data(), static_cast<std::size_t>(x.size()), lo, hi);
    return y;
}

template <typename T>
Tensor<T> hard_clip_backward(const Tensor<T>& x, const Tensor<T>& dy, T lo, T hi) {
    Tensor<T> dx(x.dims());
    for (std::int64_t i = 0; i < x.size(); ++i)
        dx[i] = (x[i] > lo && x[i] < hi) ? dy[i] : T(0);
    return dx;
}

// --------------------------------------------------------------------------
// Instance normalization: per channel of a single sample, population
// variance, learned affine.
// --------------------------------------------------------------------------

template <typename T>
struct InstanceNormCache {
    Tensor<T> xhat;           // normalized activations, pre-affine
    std::vector<T> inv_std;   // per channel
};

template <typename T>
Tensor<T> instance_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                        T eps, std::type_identity_t<InstanceNormCache<T>>* cache) {
    if (x.rank() != 3) throw ShapeError("instance_norm: input must be (C, H, W)");
    const int c = x.dim(0);
    if (gamma.size() != c || beta.size() != c)
        throw ShapeError("instance_norm: affine parameter size mismatch");
    const std::int64_t hw = static_cast<std::int64_t>(x.dim(1)) * x.dim(2);
    Tensor<T> y(x.dims());
    if (cache) {
        cache->xhat = Tensor<T>(x.dims());
        cache->inv_std.assign(static_cast<std::size_t>(c), T(0));
    }
    for (int ch = 0; ch < c; ++ch) {
        const T* src = x.data() + ch * hw;
        T* dst = y.data() + ch * hw;
        const T mean = kernels::sum(src, static_cast<std::size_t>(hw)) / static_cast<T>(hw);
        T var = T(0);
        for (std::int64_t i = 0; i < hw; ++i) {
            const T d = src[i] - mean;
            var += d * d;
        }
        var /= static_cast<T>(hw);
        const T inv_std = T(1) / std::sqrt(var + eps);
        const T g = gamma[ch], b = beta[ch];
        T* xh = cache ? cache->xhat.data() + ch * hw : nullptr;
        for (std::int64_t i = 0; i < hw; ++i) {
            const T xhat = (src[i] - mean) * inv_std;
            if (xh) xh[i] = xhat;
            dst[i] = g * xhat + b;
        }
        if (cache) cache->inv_std[static_cast<std::size_t>(ch)] = inv_std;
    }
    return y;
}

// dx = gamma * inv_std * (dy - mean(dy) - xhat * mean(dy * xhat)), the usual
// closed form with the population-variance convention. dgamma/dbeta are
// accumulated.
template <typename T>
Tensor<T> instance_norm_backward(const Tensor<T>& dy, const InstanceNormCache<T>& cache,
                                 const Tensor<T>& gamma,
                                 std::type_identity_t<Tensor<T>>* dgamma,
                                 std::type_identity_t<Tensor<T>>* dbeta) {
    const int c = dy.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(dy.dim(1)) * dy.dim(2);
    Tensor<T> dx(dy.dims());
    for (int ch = 0; ch < c; ++ch) {
        const T* g = dy.data() + ch * hw;
        const T* xh = cache.xhat.data() + ch * hw;
        T* dst = dx.data() + ch * hw;
        const T sum_dy = kernels::sum(g, static_cast<std::size_t>(hw));
        const T sum_dy_xhat = kernels::dot(g, xh, static_cast<std::size_t>(hw));
        if (dbeta) (*dbeta)[ch] += sum_dy;
        if (dgamma) (*dgamma)[ch] += sum_dy_xhat;
        const T mean_dy = sum_dy / static_cast<T>(hw);
        const T mean_dy_xhat = sum_dy_xhat / static_cast<T>(hw);
        const T scale = gamma[ch] * cache.inv_std[static_cast<std::size_t>(ch)];
        for (std::int64_t i = 0; i < hw; ++i)
            dst[i] = scale * (g[i] - mean_dy - xh[i] * mean_dy_xhat);
    }
    return dx;
}

// --------------------------------------------------------------------------
// Bilinear resize with the half-pixel sampling convention:
// src = (dst + 0.5) * in/out - 0.5, clamped to the valid range.
// --------------------------------------------------------------------------

struct BilinearAxis {
    int lo;      // lower source index
    int hi;      // upper source index (== lo at the borders)
    double w_hi; // weight of the upper sample
};

inline std::vector<BilinearAxis> bilinear_axis(int in, int out) {
    std::vector<BilinearAxis> m(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int i = 0; i < out; ++i) {
        double src = (i + 0.5) * scale - 0.5;
        src = std::max(0.0, std::min(src, static_cast<double>(in - 1)));
        const int lo = static_cast<int>(src);
        m[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, in - 1), src - lo};
    }
    return m;
}

template <typename T>
Tensor<T> bilinear_resize(const Tensor<T>& x, int out_h, int out_w) {
    if (x.rank() != 3) throw ShapeError("bilinear_resize: input must be (C, H, W)");
    const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
    const auto ys = bilinear_axis(h, out_h);
    const auto xs = bilinear_axis(w, out_w);
    Tensor<T> y({c, out_h, out_w});
    for (int ch = 0; ch < c; ++ch) {
        const T* plane = x.data() + static_cast<std::int64_t>(ch) * h * w;
        T* dst = y.data() + static_cast<std::int64_t>(ch) * out_h * out_w;
        for (int oy = 0; oy < out_h; ++oy) {
            const auto& ay = ys[static_cast<std::size_t>(oy)];
            const T wy = static_cast<T>(ay.w_hi);
            const T* r0 = plane + static_cast<std::int64_t>(ay.lo) * w;
            const T* r1 = plane + static_cast<std::int64_t>(ay.hi) * w;
            for (int ox = 0; ox < out_w; ++ox) {
                const auto& ax = xs[static_cast<std::size_t>(ox)];
                const T wx = static_cast<T>(ax.w_hi);
                const T top = r0[ax.lo] + wx * (r0[ax.hi] - r0[ax.lo]);
                const T bot = r1[ax.lo] + wx * (r1[ax.hi] - r1[ax.lo]);
                dst[static_cast<std::int64_t>(oy) * out_w + ox] = top + wy * (bot - top);
            }
        }
    }
    return y;
}

// Adjoint of bilinear_resize: scatter-adds each output gradient onto its four
// source taps with the forward weights.
template <typename T>
Tensor<T> bilinear_resize_backward(const Tensor<T>& dy, int in_h, int in_w) {
    const int c = dy.dim(0), oh = dy.dim(1), ow = dy.dim(2);
    const auto ys = bilinear_axis(in_h, oh);
    const auto xs = bilinear_axis(in_w, ow);
    Tensor<T> dx({c, in_h, in_w});
    for (int ch = 0; ch < c; ++ch) {
        const T* src = dy.data() + static_cast<std::int64_t>(ch) * oh * ow;
        T* plane = dx.data() + static_cast<std::int64_t>(ch) * in_h * in_w;
        for (int oy = 0; oy < oh; ++oy) {
            const auto& ay = ys[static_cast<std::size_t>(oy)];
            const T wy = static_cast<T>(ay.w_hi);
            for (int ox = 0; ox < ow; ++ox) {
                const auto& ax = xs[static_cast<std::size_t>(ox)];
                const T wx = static_cast<T>(ax.w_hi);
                const T g = src[static_cast<std::int64_t>(oy) * ow + ox];
                plane[static_cast<std::int64_t>(ay.lo) * in_w + ax.lo] +=
                    (T(1) - wy) * (T(1) - wx) * g;
                plane[static_cast<std::int64_t>(ay.lo) * in_w + ax.hi] += (T(1) - wy) * wx * g;
                plane[static_cast<std::int64_t>(ay.hi) * in_w + ax.lo] += wy * (T(1) - wx) * g;
                plane[static_cast<std::int64_t>(ay.hi) * in_w + ax.hi] += wy * wx * g;
            }
        }
    }
    return dx;
}

// --------------------------------------------------------------------------
// Channel concatenation (used by the skip connections and the net inputs).
// --------------------------------------------------------------------------

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(1) != b.dim(1) || a.dim(2) != b.dim(2))
        throw ShapeError("concat_channels: spatial size mismatch");
    Tensor<T> out({a.dim(0) + b.dim(0), a.dim(1), a.dim(2)});
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

// Splits an upstream gradient back into the two concatenated parts.
template <typename T>
void split_channels(const Tensor<T>& dy, int c_first, Tensor<T>& da, Tensor<T>& db) {
    const int c = dy.dim(0);
    if (c_first <= 0 || c_first >= c) throw ShapeError("split_channels: bad split point");
    da = Tensor<T>({c_first, dy.dim(1), dy.dim(2)});
    db = Tensor<T>({c - c_first, dy.dim(1), dy.dim(2)});
    std::copy(dy.data(), dy.data() + da.size(), da.data());
    std::copy(dy.data() + da.size(), dy.data() + dy.size(), db.data());
}

// --------------------------------------------------------------------------
// Fully connected layers on rank-1 vectors.
// --------------------------------------------------------------------------

template <typename T>
Tensor<T> fc(const Tensor<T>& x, const Tensor<T>& w, const std::type_identity_t<Tensor<T>>* b) {
    if (x.rank() != 1 || w.rank() != 2 || w.dim(1) != x.dim(0))
        throw ShapeError("fc: weight/input shape mismatch");
    const int out = w.dim(0), in = w.dim(1);
    Tensor<T> y({out});
    for (int o = 0; o < out; ++o) {
        T v = kernels::dot(w.data() + static_cast<std::int64_t>(o) * in, x.data(),
                           static_cast<std::size_t>(in));
        if (b) v += (*b)[o];
        y[o] = v;
    }
    return y;
}

// dx = W^T dy; dW += dy x^T; db += dy.
template <typename T>
void fc_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                 std::type_identity_t<Tensor<T>>* dx, std::type_identity_t<Tensor<T>>* dw,
                 std::type_identity_t<Tensor<T>>* db) {
    const int out = w.dim(0), in = w.dim(1);
    if (dx) {
        dx->fill(T(0));
        for (int o = 0; o < out; ++o)
            kernels::axpy(dy[o], w.data() + static_cast<std::int64_t>(o) * in, dx->data(),
                          static_cast<std::size_t>(in));
    }
    if (dw) {
        for (int o = 0; o < out; ++o)
            kernels::axpy(dy[o], x.data(), dw->data() + static_cast<std::int64_t>(o) * in,
                          static_cast<std::size_t>(in));
    }
    if (db) {
        for (int o = 0; o < out; ++o) (*db)[o] += dy[o];
    }
}

}  // namespace outpaint::nn
