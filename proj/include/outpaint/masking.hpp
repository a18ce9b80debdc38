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

#include <cstdint>
#include <vector>

#include "outpaint/core/errors.hpp"
#include "outpaint/core/rng.hpp"
#include "outpaint/core/tensor.hpp"

namespace outpaint::masking {

// Masks are rank-2 (H, W) float tensors whose entries are exactly 0 or 1;
// 1 marks the unknown region the generator must synthesize.
using Mask = TensorF;

enum class MaskGeometry { RightStrip, CentralSquare, FreeForm };

struct MaskSpec {
    MaskGeometry geometry = MaskGeometry::RightStrip;
    // Fraction of image width (right strip) or of pixel area (central square).
    double fraction = 0.25;
    // Uniform +/- range applied to the strip width or square side.
    int jitter_px = 0;
    std::uint64_t seed = 0;
    // Explicit bitmap for FreeForm geometry; ignored otherwise.
    Mask bitmap;
};

// Round-half-away-from-zero, the rounding rule used for all mask sizing.
int round_half_away(double v);

// Throws ConfigError when the mask description is malformed (fraction out
// of (0,1), negative jitter, free-form bitmap missing or non-binary).
void validate(const MaskSpec& spec);

// Deterministic mask construction. The first overload seeds a private stream
// from spec.seed; the second draws the jitter offset from the caller's
// stream (one draw per call). Throws ConfigError when the unknown region
// would be empty or cover the whole image for any jitter within range.
Mask build_mask(const MaskSpec& spec, int height, int width);
Mask build_mask(const MaskSpec& spec, int height, int width, Rng& rng);

// Rightmost-strip mask with an explicit column count (0 < strip_w < width).
Mask right_strip_mask(int height, int width, int strip_w);

// z = x * (1 - M): known pixels pass through bitwise, unknown pixels are
// exactly zero. x is (C, H, W); the mask broadcasts over channels.
template <typename T>
Tensor<T> apply_mask(const Tensor<T>& x, const Mask& m) {
    if (x.rank() != 3 || m.rank() != 2 || x.dim(1) != m.dim(0) || x.dim(2) != m.dim(1))
        throw ShapeError("apply_mask: image/mask shape mismatch");
    Tensor<T> z(x.dims());
    const int c = x.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(m.dim(0)) * m.dim(1);
    for (int ch = 0; ch < c; ++ch) {
        const T* src = x.data() + ch * hw;
        T* dst = z.data() + ch * hw;
        for (std::int64_t i = 0; i < hw; ++i) dst[i] = m[i] == 0.0f ? src[i] : T(0);
    }
    return z;
}

// x_hat = g * M + z: exactly z where M = 0 and exactly g where M = 1
// (z is zero in the unknown region, so the select and the arithmetic form
// coincide bit for bit).
template <typename T>
Tensor<T> composite(const Tensor<T>& g, const Tensor<T>& z, const Mask& m) {
    if (!g.same_shape(z)) throw ShapeError("composite: image shape mismatch");
    if (g.rank() != 3 || m.rank() != 2 || g.dim(1) != m.dim(0) || g.dim(2) != m.dim(1))
        throw ShapeError("composite: image/mask shape mismatch");
    Tensor<T> out(g.dims());
    const int c = g.dim(0);
    const std::int64_t hw = static_cast<std::int64_t>(m.dim(0)) * m.dim(1);
    for (int ch = 0; ch < c; ++ch) {
        const T* gs = g.data() + ch * hw;
        const T* zs = z.data() + ch * hw;
        T* dst = out.data() + ch * hw;
        for (std::int64_t i = 0; i < hw; ++i) dst[i] = m[i] == 0.0f ? zs[i] : gs[i];
    }
    return out;
}

// 8-bit import/export convention: 0 = known, 255 = unknown, nothing else.
std::vector<std::uint8_t> mask_to_gray8(const Mask& m);
Mask mask_from_gray8(const std::uint8_t* data, int height, int width);

// Number of unknown pixels.
std::int64_t unknown_count(const Mask& m);

// Width of the rightmost unknown strip; throws ConfigError when the mask is
// not a contiguous right strip.
int strip_width(const Mask& m);

}  // namespace outpaint::masking
