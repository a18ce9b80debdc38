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

#include "outpaint/nn/discriminator.hpp"

namespace outpaint::nn {

std::vector<DiscTraceEntry> discriminator_trace(const DiscriminatorConfig& cfg, int h, int w) {
    if (h != w) throw ShapeError("discriminator: input must be square");
    if (cfg.tower_channels.size() != cfg.tower_strides.size())
        throw ConfigError("discriminator: channel/stride tables differ in length");
    std::vector<DiscTraceEntry> out;
    int cur = h;
    for (std::size_t i = 0; i < cfg.tower_channels.size(); ++i) {
        const bool last = i + 1 == cfg.tower_channels.size();
        if (last) {
            // Valid conv, kernel bound to the remaining extent.
            if (cur < 1) throw ShapeError("discriminator: tower ran out of pixels");
            cur = 1;
        } else {
            const ConvGeom g{cfg.tower_kernel, cfg.tower_strides[i], 1, Padding::Same};
            cur = conv_out_size(cur, g);
        }
        out.push_back({scaled_channels(cfg.tower_channels[i], cfg.width_multiplier), cur, cur});
    }
    return out;
}

int discriminator_final_kernel(const DiscriminatorConfig& cfg) {
    int cur = cfg.input_size;
    for (std::size_t i = 0; i + 1 < cfg.tower_strides.size(); ++i) {
        const ConvGeom g{cfg.tower_kernel, cfg.tower_strides[i], 1, Padding::Same};
        cur = conv_out_size(cur, g);
    }
    if (cur < 1) throw ShapeError("discriminator: input too small for the tower");
    return cur;
}

int discriminator_proj_dim(const DiscriminatorConfig& cfg) {
    if (cfg.tower_channels.empty())
        throw ConfigError("discriminator: tower must have at least one layer");
    return scaled_channels(cfg.tower_channels.back(), cfg.width_multiplier);
}

std::int64_t discriminator_param_count(const DiscriminatorConfig& cfg) {
    const int final_k = discriminator_final_kernel(cfg);
    std::int64_t total = 0;
    int in_ch = cfg.in_channels;
    for (std::size_t i = 0; i < cfg.tower_channels.size(); ++i) {
        const bool last = i + 1 == cfg.tower_channels.size();
        const int k = last ? final_k : cfg.tower_kernel;
        const int out_ch = scaled_channels(cfg.tower_channels[i], cfg.width_multiplier);
        total += static_cast<std::int64_t>(out_ch) * in_ch * k * k + out_ch;
        in_ch = out_ch;
    }
    const int proj = discriminator_proj_dim(cfg);
    total += proj;  // f_phi, no bias
    if (cfg.use_conditioning) total += static_cast<std::int64_t>(proj) * cfg.embed_dim;
    return total;
}

}  // namespace outpaint::nn
