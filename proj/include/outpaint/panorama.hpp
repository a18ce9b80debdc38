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
#include <functional>

#include "outpaint/core/tensor.hpp"
#include "outpaint/nn/generator.hpp"

namespace outpaint::panorama {

// Sliding-window extension settings. Each step the rightmost seed_width
// columns of the current strip are padded with pad_width zero columns and
// handed to the generator, so seed_width + pad_width must equal the width
// the model was trained at.
struct PanoramaConfig {
    int seed_width = 192;
    int pad_width = 65;
    int window_height = 257;
    int steps = 6;
    std::int64_t max_width = 1 << 16;  // refuse to grow beyond this

    void validate() const;  // throws ConfigError
};

// One extension: pad pad_width zero columns on the right, mask them as
// unknown, run the generator, and composite so the known columns pass
// through bitwise unchanged. The input must be 3 x window_height x
// seed_width; the result is 3 x window_height x (seed_width + pad_width).
TensorF extend_once(nn::Generator<float>& g, const TensorF& image,
                    const PanoramaConfig& cfg);

// Repeats extend_once cfg.steps times, always re-windowing on the rightmost
// seed_width columns, and appends only the freshly generated pad_width
// columns, so the final width is seed_width + steps * pad_width and every
// previously emitted column stays bitwise unchanged. on_step, when given,
// observes the strip after each extension (1-based step index).
TensorF generate_panorama(
    nn::Generator<float>& g, const TensorF& seed, const PanoramaConfig& cfg,
    const std::function<void(int, const TensorF&)>& on_step = nullptr);

// Horizontal flip (x -> w-1-x) of a CHW image; an involution.
TensorF mirror_horizontal(const TensorF& image);

// Leftward extension as a convenience transform: mirror, extend right,
// mirror back. The new columns appear on the left; the original image is
// preserved bitwise on the right.
TensorF extend_left_once(nn::Generator<float>& g, const TensorF& image,
                         const PanoramaConfig& cfg);

}  // namespace outpaint::panorama
