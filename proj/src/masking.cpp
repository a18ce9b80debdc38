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

#include "outpaint/masking.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace outpaint::masking {

int round_half_away(double v) { return static_cast<int>(std::llround(v)); }

namespace {

bool is_binary(const Mask& m) {
    for (std::int64_t i = 0; i < m.size(); ++i)
        if (m[i] != 0.0f && m[i] != 1.0f) return false;
    return true;
}

// Strip width / square side after jitter j; callers check the extremes
// j = -jitter_px and j = +jitter_px since the size is monotone in j.
void check_strip_range(const MaskSpec& spec, int width) {
    const int base = round_half_away(spec.fraction * width);
    for (int j : {-spec.jitter_px, spec.jitter_px}) {
        const int w = base + j;
        if (w <= 0)
            throw ConfigError("mask spec: strip width " + std::to_string(w) +
                              " is empty within jitter range");
        if (w >= width)
            throw ConfigError("mask spec: strip width " + std::to_string(w) +
                              " covers the whole image within jitter range");
    }
}

void check_square_range(const MaskSpec& spec, int height, int width) {
    const int base = round_half_away(std::sqrt(spec.fraction) * width);
    for (int j : {-spec.jitter_px, spec.jitter_px}) {
        const int s = base + j;
        if (s <= 0)
            throw ConfigError("mask spec: square side " + std::to_string(s) +
                              " is empty within jitter range");
        if (s > std::min(height, width) || (s >= height && s >= width))
            throw ConfigError("mask spec: square side " + std::to_string(s) +
                              " does not leave any known pixels within jitter range");
    }
}

}  // namespace

void validate(const MaskSpec& spec) {
    if (spec.jitter_px < 0) throw ConfigError("mask spec: jitter_px must be >= 0");
    if (spec.geometry == MaskGeometry::FreeForm) {
        if (spec.bitmap.rank() != 2)
            throw ConfigError("mask spec: free-form geometry requires a rank-2 bitmap");
        if (!is_binary(spec.bitmap))
            throw ConfigError("mask spec: free-form bitmap entries must be exactly 0 or 1");
        const std::int64_t n = unknown_count(spec.bitmap);
        if (n == 0) throw ConfigError("mask spec: free-form bitmap has no unknown pixels");
        if (n == spec.bitmap.size())
            throw ConfigError("mask spec: free-form bitmap covers the whole image");
        return;
    }
    if (!(spec.fraction > 0.0 && spec.fraction < 1.0))
        throw ConfigError("mask spec: fraction must lie strictly inside (0, 1)");
}

Mask build_mask(const MaskSpec& spec, int height, int width) {
    Rng rng(spec.seed);
    return build_mask(spec, height, width, rng);
}

Mask build_mask(const MaskSpec& spec, int height, int width, Rng& rng) {
    validate(spec);
    if (height < 8 || width < 8)
        throw ConfigError("build_mask: image sides must be at least 8 pixels");

    if (spec.geometry == MaskGeometry::FreeForm) {
        if (spec.bitmap.dim(0) != height || spec.bitmap.dim(1) != width)
            throw ShapeError("build_mask: free-form bitmap does not match the image size");
        return spec.bitmap;
    }

    const int j = spec.jitter_px > 0 ? rng.uniform_int(-spec.jitter_px, spec.jitter_px) : 0;

    if (spec.geometry == MaskGeometry::RightStrip) {
        check_strip_range(spec, width);
        const int w = round_half_away(spec.fraction * width) + j;
        return right_strip_mask(height, width, w);
    }

    // Central square, side round(sqrt(fraction) * width) + j, centered with
    // the extra pixel (odd leftovers) going to the bottom/right.
    check_square_range(spec, height, width);
    const int side = round_half_away(std::sqrt(spec.fraction) * width) + j;
    const int y0 = (height - side) / 2;
    const int x0 = (width - side) / 2;
    Mask m = Mask::zeros({height, width});
    for (int y = y0; y < y0 + side; ++y)
        for (int x = x0; x < x0 + side; ++x) m.at(y, x) = 1.0f;
    return m;
}

Mask right_strip_mask(int height, int width, int strip_w) {
    if (strip_w <= 0 || strip_w >= width)
        throw ConfigError("right_strip_mask: strip width " + std::to_string(strip_w) +
                          " out of range for image width " + std::to_string(width));
    Mask m = Mask::zeros({height, width});
    for (int y = 0; y < height; ++y)
        for (int x = width - strip_w; x < width; ++x) m.at(y, x) = 1.0f;
    return m;
}

std::vector<std::uint8_t> mask_to_gray8(const Mask& m) {
    if (m.rank() != 2) throw ShapeError("mask_to_gray8: mask must be rank 2");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(m.size()));
    for (std::int64_t i = 0; i < m.size(); ++i) {
        if (m[i] != 0.0f && m[i] != 1.0f)
            throw DataError("mask_to_gray8: mask entries must be exactly 0 or 1");
        out[static_cast<std::size_t>(i)] = m[i] == 0.0f ? 0 : 255;
    }
    return out;
}

Mask mask_from_gray8(const std::uint8_t* data, int height, int width) {
    Mask m({height, width});
    const std::int64_t n = static_cast<std::int64_t>(height) * width;
    for (std::int64_t i = 0; i < n; ++i) {
        if (data[i] == 0)
            m[i] = 0.0f;
        else if (data[i] == 255)
            m[i] = 1.0f;
        else
            throw DataError("mask image: pixel value " + std::to_string(int(data[i])) +
                            " is neither 0 (known) nor 255 (unknown)");
    }
    return m;
}

std::int64_t unknown_count(const Mask& m) {
    std::int64_t n = 0;
    for (std::int64_t i = 0; i < m.size(); ++i) n += m[i] != 0.0f;
    return n;
}

int strip_width(const Mask& m) {
    if (m.rank() != 2) throw ShapeError("strip_width: mask must be rank 2");
    const int h = m.dim(0), w = m.dim(1);
    // Column is unknown when every row marks it unknown; known when none do.
    int first_unknown = w;
    for (int x = 0; x < w; ++x) {
        int count = 0;
        for (int y = 0; y < h; ++y) count += m.at(y, x) != 0.0f;
        if (count != 0 && count != h)
            throw ConfigError("strip_width: mask is not a clean column strip");
        if (count == h && first_unknown == w) first_unknown = x;
        if (count == 0 && first_unknown != w)
            throw ConfigError("strip_width: unknown columns are not contiguous at the right");
    }
    return w - first_unknown;
}

}  // namespace outpaint::masking
