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

#include "outpaint/panorama.hpp"

#include <cstring>
#include <string>

#include "outpaint/core/errors.hpp"
#include "outpaint/masking.hpp"

namespace outpaint::panorama {

namespace {

std::string dims_string(const TensorF& t) {
    std::string s;
    for (int i = 0; i < t.rank(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.dim(i));
    }
    return s.empty() ? "scalar" : s;
}

void require_chw(const TensorF& image, int h, int w, const char* what) {
    if (image.rank() != 3 || image.dim(0) != 3 || image.dim(1) != h ||
        image.dim(2) != w) {
        throw ShapeError(std::string(what) + ": expected 3x" +
                         std::to_string(h) + "x" + std::to_string(w) +
                         " image, got " + dims_string(image));
    }
}

// Copies src columns [src_x0, src_x0+cols) into dst at dst_x0, all channels.
void copy_columns(const TensorF& src, int src_x0, TensorF& dst, int dst_x0,
                  int cols) {
    const int h = static_cast<int>(src.dim(1));
    const int sw = static_cast<int>(src.dim(2));
    const int dw = static_cast<int>(dst.dim(2));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            std::memcpy(&dst.data()[(static_cast<std::size_t>(c) * h + y) * dw +
                                    dst_x0],
                        &src.data()[(static_cast<std::size_t>(c) * h + y) * sw +
                                    src_x0],
                        sizeof(float) * static_cast<std::size_t>(cols));
}

}  // namespace

void PanoramaConfig::validate() const {
    if (seed_width <= 0 || pad_width <= 0 || window_height <= 0)
        throw ConfigError("panorama: seed_width, pad_width and window_height must be positive");
    if (steps < 0) throw ConfigError("panorama: steps must be >= 0");
    if (max_width <= 0) throw ConfigError("panorama: max_width must be positive");
    const std::int64_t final_width =
        static_cast<std::int64_t>(seed_width) +
        static_cast<std::int64_t>(steps) * pad_width;
    if (final_width > max_width)
        throw ConfigError("panorama: " + std::to_string(steps) +
                          " steps would grow the strip to " +
                          std::to_string(final_width) + " columns, beyond the " +
                          std::to_string(max_width) + " limit");
}

TensorF extend_once(nn::Generator<float>& g, const TensorF& image,
                    const PanoramaConfig& cfg) {
    cfg.validate();
    require_chw(image, cfg.window_height, cfg.seed_width, "extend_once");
    const int h = cfg.window_height;
    const int w = cfg.seed_width + cfg.pad_width;

    TensorF padded({3, h, w});  // zero-filled, so the new columns start blank
    copy_columns(image, 0, padded, 0, cfg.seed_width);

    const masking::Mask m = masking::right_strip_mask(h, w, cfg.pad_width);
    const TensorF z = masking::apply_mask(padded, m);
    const TensorF out = g.forward(z, m, /*training=*/false);
    return masking::composite(out, z, m);
}

TensorF generate_panorama(
    nn::Generator<float>& g, const TensorF& seed, const PanoramaConfig& cfg,
    const std::function<void(int, const TensorF&)>& on_step) {
    cfg.validate();
    require_chw(seed, cfg.window_height, cfg.seed_width, "generate_panorama");

    TensorF strip = seed;
    for (int k = 1; k <= cfg.steps; ++k) {
        const int cur_w = static_cast<int>(strip.dim(2));
        TensorF window({3, cfg.window_height, cfg.seed_width});
        copy_columns(strip, cur_w - cfg.seed_width, window, 0, cfg.seed_width);

        const TensorF extended = extend_once(g, window, cfg);

        TensorF grown({3, cfg.window_height, cur_w + cfg.pad_width});
        copy_columns(strip, 0, grown, 0, cur_w);
        copy_columns(extended, cfg.seed_width, grown, cur_w, cfg.pad_width);
        strip = std::move(grown);
        if (on_step) on_step(k, strip);
    }
    return strip;
}

TensorF mirror_horizontal(const TensorF& image) {
    if (image.rank() != 3)
        throw ShapeError("mirror_horizontal: expected a CHW image, got " +
                         dims_string(image));
    const int c = static_cast<int>(image.dim(0));
    const int h = static_cast<int>(image.dim(1));
    const int w = static_cast<int>(image.dim(2));
    TensorF out(image.dims());
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) {
            const float* src =
                &image.data()[(static_cast<std::size_t>(ch) * h + y) * w];
            float* dst = &out.data()[(static_cast<std::size_t>(ch) * h + y) * w];
            for (int x = 0; x < w; ++x) dst[x] = src[w - 1 - x];
        }
    return out;
}

TensorF extend_left_once(nn::Generator<float>& g, const TensorF& image,
                         const PanoramaConfig& cfg) {
    return mirror_horizontal(extend_once(g, mirror_horizontal(image), cfg));
}

}  // namespace outpaint::panorama
