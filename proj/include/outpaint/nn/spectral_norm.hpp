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

#include <cmath>

#include "outpaint/core/rng.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/kernels/kernels.hpp"

namespace outpaint::nn {

// Power-iteration spectral normalization for a matrixized weight W (m, n).
// The singular-vector estimates u (m) and v (n) persist across steps and are
// serialized with checkpoints. One call to advance() per training step; all
// weight uses within that step share the frozen (u, v, sigma).
template <typename T>
struct SpectralNorm {
    Tensor<T> u;
    Tensor<T> v;
    bool degenerate = false;  // last normalize saw an effectively zero weight

    void init(int rows, int cols, Rng& rng) {
        u = Tensor<T>({rows});
        v = Tensor<T>({cols});
        for (std::int64_t i = 0; i < u.size(); ++i) u[i] = static_cast<T>(rng.normal());
        for (std::int64_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(rng.normal());
        normalize_vec(u);
        normalize_vec(v);
    }

    // One power iteration: v <- normalize(W^T u), u <- normalize(W v).
    void advance(const Tensor<T>& w) {
        const int m = w.dim(0), n = w.dim(1);
        Tensor<T> wtu({n});
        // W^T u without materializing the transpose.
        for (int i = 0; i < m; ++i)
            kernels::axpy(u[i], w.data() + static_cast<std::int64_t>(i) * n, wtu.data(),
                          static_cast<std::size_t>(n));
        if (!normalize_vec(wtu)) return;  // zero weight: leave the state alone
        v = wtu;
        Tensor<T> wv({m});
        for (int i = 0; i < m; ++i)
            wv[i] = kernels::dot(w.data() + static_cast<std::int64_t>(i) * n, v.data(),
                                 static_cast<std::size_t>(n));
        if (!normalize_vec(wv)) return;
        u = wv;
    }

    // sigma = u^T W v with the current (frozen) vectors.
    T sigma(const Tensor<T>& w) const {
        const int m = w.dim(0), n = w.dim(1);
        T s = T(0);
        for (int i = 0; i < m; ++i)
            s += u[i] * kernels::dot(w.data() + static_cast<std::int64_t>(i) * n, v.data(),
                                     static_cast<std::size_t>(n));
        return s;
    }

    // wbar = w / sigma. Returns the sigma actually divided by; a degenerate
    // (near-zero) estimate leaves the weight unchanged and flags the state.
    T normalize_into(const Tensor<T>& w, Tensor<T>& wbar) {
        const T s = sigma(w);
        wbar = w;
        if (!(std::abs(s) > T(1e-12))) {
            degenerate = true;
            return T(1);
        }
        degenerate = false;
        kernels::scale(T(1) / s, wbar.data(), static_cast<std::size_t>(wbar.size()));
        return s;
    }

    // dL/dW from dL/dWbar with u, v, sigma frozen:
    //   dW = (g - (g : Wbar) u v^T) / sigma
    void backward(const Tensor<T>& wbar, T sig, const Tensor<T>& g, Tensor<T>& dw) const {
        const int m = wbar.dim(0), n = wbar.dim(1);
        if (degenerate) {
            // Weight passed through unnormalized; gradient passes through too.
            kernels::axpy(T(1), g.data(), dw.data(), static_cast<std::size_t>(g.size()));
            return;
        }
        const T trace = kernels::dot(g.data(), wbar.data(), static_cast<std::size_t>(g.size()));
        const T inv_sigma = T(1) / sig;
        for (int i = 0; i < m; ++i) {
            const T* grow = g.data() + static_cast<std::int64_t>(i) * n;
            T* drow = dw.data() + static_cast<std::int64_t>(i) * n;
            const T ui = u[i];
            for (int j = 0; j < n; ++j)
                drow[j] += inv_sigma * (grow[j] - trace * ui * v[j]);
        }
    }

private:
    static bool normalize_vec(Tensor<T>& x) {
        const T nrm = std::sqrt(kernels::sumsq(x.data(), static_cast<std::size_t>(x.size())));
        if (!(nrm > T(1e-20))) return false;
        kernels::scale(T(1) / nrm, x.data(), static_cast<std::size_t>(x.size()));
        return true;
    }
};

}  // namespace outpaint::nn
