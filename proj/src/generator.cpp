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

#include "outpaint/nn/generator.hpp"

#include <cmath>
#include <string>

namespace outpaint::nn {

const std::vector<GenLayer>& default_generator_table() {
    // kind, kernel, stride, dilation, out_ch, skip_source
    static const std::vector<GenLayer> table = {
        {GenLayerKind::GatedConv, 5, 1, 1, 32, 0},    // 1
        {GenLayerKind::GatedConv, 3, 2, 1, 64, 0},    // 2
        {GenLayerKind::GatedConv, 3, 1, 1, 64, 0},    // 3
        {GenLayerKind::GatedConv, 3, 2, 1, 128, 0},   // 4
        {GenLayerKind::GatedConv, 3, 1, 1, 128, 0},   // 5
        {GenLayerKind::GatedConv, 3, 1, 1, 128, 0},   // 6
        {GenLayerKind::GatedConv, 3, 1, 2, 128, 0},   // 7
        {GenLayerKind::GatedConv, 3, 1, 4, 128, 0},   // 8
        {GenLayerKind::GatedConv, 3, 1, 8, 128, 0},   // 9
        {GenLayerKind::GatedConv, 3, 1, 16, 128, 0},  // 10
        {GenLayerKind::GatedConv, 3, 1, 1, 128, 5},   // 11
        {GenLayerKind::GatedConv, 3, 1, 1, 128, 4},   // 12
        {GenLayerKind::Resize, 0, 0, 0, 0, 0},        // 13
        {GenLayerKind::GatedConv, 3, 1, 1, 64, 3},    // 14
        {GenLayerKind::GatedConv, 3, 1, 1, 64, 2},    // 15
        {GenLayerKind::Resize, 0, 0, 0, 0, 0},        // 16
        {GenLayerKind::GatedConv, 3, 1, 1, 32, 1},    // 17
        {GenLayerKind::GatedConv, 3, 1, 1, 16, 0},    // 18
        {GenLayerKind::PlainConv, 3, 1, 1, 3, 0},     // 19
        {GenLayerKind::Clip, 0, 0, 0, 0, 0},          // 20
    };
    return table;
}

int scaled_channels(int table_value, double width_multiplier) {
    const int scaled = static_cast<int>(std::ceil(width_multiplier * table_value));
    return scaled < 1 ? 1 : scaled;
}

std::vector<GenTraceEntry> generator_trace(const GeneratorConfig& cfg, int h, int w) {
    const std::vector<GenLayer>& layers =
        cfg.layers.empty() ? default_generator_table() : cfg.layers;
    if (cfg.width_multiplier <= 0.0)
        throw ConfigError("generator: width_multiplier must be positive");
    std::vector<GenTraceEntry> out;
    out.reserve(layers.size());
    int ch = cfg.in_channels;
    int cur_h = h, cur_w = w;
    std::vector<std::pair<int, int>> size_stack;

    for (std::size_t i = 0; i < layers.size(); ++i) {
        const GenLayer& L = layers[i];
        GenTraceEntry e{};
        e.kind = L.kind;
        e.in_ch = ch;
        switch (L.kind) {
            case GenLayerKind::GatedConv: {
                if (L.stride == 2) size_stack.emplace_back(cur_h, cur_w);
                const ConvGeom g{L.kernel, L.stride, L.dilation, Padding::Same};
                cur_h = conv_out_size(cur_h, g);
                cur_w = conv_out_size(cur_w, g);
                e.own_ch = scaled_channels(L.out_ch, cfg.width_multiplier);
                break;
            }
            case GenLayerKind::PlainConv: {
                const ConvGeom g{L.kernel, L.stride, L.dilation, Padding::Same};
                cur_h = conv_out_size(cur_h, g);
                cur_w = conv_out_size(cur_w, g);
                e.own_ch = L.out_ch;  // the RGB head is never width-scaled
                break;
            }
            case GenLayerKind::Resize: {
                if (size_stack.empty())
                    throw ShapeError("generator: resize without a matching encoder stage");
                cur_h = size_stack.back().first;
                cur_w = size_stack.back().second;
                size_stack.pop_back();
                e.own_ch = ch;
                break;
            }
            case GenLayerKind::Clip:
                e.own_ch = ch;
                break;
        }
        e.out_ch = e.own_ch;
        if (L.skip_source > 0 && cfg.use_skips) {
            if (L.skip_source > static_cast<int>(i))
                throw ConfigError("generator: skip source " + std::to_string(L.skip_source) +
                                  " does not precede layer " + std::to_string(i + 1));
            const GenTraceEntry& src = out[static_cast<std::size_t>(L.skip_source - 1)];
            if (src.h != cur_h || src.w != cur_w)
                throw ShapeError("generator: skip source " + std::to_string(L.skip_source) +
                                 " spatial size does not match layer " + std::to_string(i + 1));
            e.out_ch += src.out_ch;
        }
        e.h = cur_h;
        e.w = cur_w;
        out.push_back(e);
        ch = e.out_ch;
    }
    return out;
}

std::int64_t generator_param_count(const GeneratorConfig& cfg) {
    GeneratorConfig full = cfg;
    if (full.layers.empty()) full.layers = default_generator_table();
    const auto trace = generator_trace(full, 64, 64);
    std::int64_t total = 0;
    for (std::size_t i = 0; i < full.layers.size(); ++i) {
        const GenLayer& L = full.layers[i];
        if (L.kind != GenLayerKind::GatedConv && L.kind != GenLayerKind::PlainConv) continue;
        const std::int64_t rows =
            (L.kind == GenLayerKind::GatedConv ? 2 : 1) * trace[i].own_ch;
        total += rows * (static_cast<std::int64_t>(trace[i].in_ch) * L.kernel * L.kernel);
        total += rows;  // bias
        if (L.kind == GenLayerKind::GatedConv && cfg.use_instance_norm)
            total += 2 * static_cast<std::int64_t>(trace[i].own_ch);
    }
    return total;
}

}  // namespace outpaint::nn
