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
#include <cstdio>
#include <string>
#include <vector>

#include "outpaint/core/errors.hpp"
#include "outpaint/core/rng.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/nn/ops.hpp"
#include "outpaint/nn/params.hpp"

namespace outpaint::nn {

// ---------------------------------------------------------------------------
// Static description of the encoder-decoder: a 20-entry layer table with
// gated convolutions, two stride-2 encoder stages, four dilated layers, two
// bilinear upsamples whose targets are the recorded encoder sizes, skip
// concatenations, and a final plain conv + hard clip to [-1, 1].
// ---------------------------------------------------------------------------

enum class GenLayerKind { GatedConv, PlainConv, Resize, Clip };

struct GenLayer {
    GenLayerKind kind = GenLayerKind::GatedConv;
    int kernel = 3;
    int stride = 1;
    int dilation = 1;
    int out_ch = 0;       // table value, before width scaling
    int skip_source = 0;  // 1-based id whose output is concatenated into this
                          // layer's output; 0 = none
};

struct GeneratorConfig {
    std::vector<GenLayer> layers;  // empty = default table
    double width_multiplier = 1.0;
    bool use_skips = true;
    bool use_instance_norm = true;
    bool norm_before_gating = false;  // normalize the feature half pre-gate
    double elu_alpha = 1.0;
    int in_channels = 5;  // [masked image (3), mask (1), ones (1)]
};

const std::vector<GenLayer>& default_generator_table();

struct GenTraceEntry {
    GenLayerKind kind;
    int own_ch;     // channels this layer itself produces
    int out_ch;     // channels after any skip concatenation
    int in_ch;      // channels entering the layer
    int h, w;       // spatial size of the layer output
};

// Pure shape walk over the table; validates skip alignment as it goes.
std::vector<GenTraceEntry> generator_trace(const GeneratorConfig& cfg, int h, int w);

// Total trainable scalar count, a pure function of the config.
std::int64_t generator_param_count(const GeneratorConfig& cfg);

// ---------------------------------------------------------------------------
// The network. Float for training, double for finite-difference checks.
// ---------------------------------------------------------------------------

template <typename T>
class Generator {
public:
    Generator(GeneratorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        if (cfg_.layers.empty()) cfg_.layers = default_generator_table();
        build(seed);
    }

    const GeneratorConfig& config() const { return cfg_; }

    // z must be the masked image (3, H, W); m the (H, W) mask. Returns the
    // full-size RGB prediction in [-1, 1]. `training` keeps the activation
    // caches needed by backward(); inference drops them as it goes.
    Tensor<T> forward(const Tensor<T>& z, const masking::Mask& m, bool training = true) {
        if (z.rank() != 3 || z.dim(0) != 3) throw ShapeError("generator: z must be (3, H, W)");
        if (m.rank() != 2 || m.dim(0) != z.dim(1) || m.dim(1) != z.dim(2))
            throw ShapeError("generator: mask does not match z");
        const int h = z.dim(1), w = z.dim(2);
        if (h < 8 || w < 8)
            throw ShapeError("generator: input too small for the stride-2 stages");

        Tensor<T> input({cfg_.in_channels, h, w});
        build_input(z, m, input);
        return forward_from_input(std::move(input), training);
    }

    // dL/d(final output); accumulates parameter gradients. Requires the
    // caches of the last training-mode forward.
    void backward(const Tensor<T>& dout) {
        const int n_layers = static_cast<int>(layers_.size());
        if (outputs_.size() != static_cast<std::size_t>(n_layers) + 1 || !training_cached_)
            throw Error("generator backward: no cached forward pass");
        std::vector<Tensor<T>> douts(static_cast<std::size_t>(n_layers) + 1);
        accumulate(douts[static_cast<std::size_t>(n_layers)], dout);

        for (int i = n_layers; i >= 1; --i) {
            Layer& L = layers_[static_cast<std::size_t>(i - 1)];
            Tensor<T>& dy_full = douts[static_cast<std::size_t>(i)];
            if (dy_full.empty()) continue;

            Tensor<T> dy;
            if (L.meta.skip_source > 0 && cfg_.use_skips) {
                Tensor<T> dskip;
                split_channels(dy_full, L.own_ch, dy, dskip);
                accumulate(douts[static_cast<std::size_t>(L.meta.skip_source)], dskip);
            } else {
                dy = std::move(dy_full);
            }

            const Tensor<T>& in = outputs_[static_cast<std::size_t>(i - 1)];
            switch (L.meta.kind) {
                case GenLayerKind::GatedConv: {
                    Tensor<T> dpre = gated_backward(L, dy);
                    Tensor<T> dx;
                    conv2d_backward(in, L.w, L.geom, dpre, i > 1 ? &dx : nullptr, &L.dw,
                                    &L.db);
                    if (i > 1) accumulate(douts[static_cast<std::size_t>(i - 1)], dx);
                    break;
                }
                case GenLayerKind::PlainConv: {
                    Tensor<T> dx;
                    conv2d_backward(in, L.w, L.geom, dy, i > 1 ? &dx : nullptr, &L.dw, &L.db);
                    if (i > 1) accumulate(douts[static_cast<std::size_t>(i - 1)], dx);
                    break;
                }
                case GenLayerKind::Resize: {
                    Tensor<T> dx = bilinear_resize_backward(dy, L.src_h, L.src_w);
                    accumulate(douts[static_cast<std::size_t>(i - 1)], dx);
                    break;
                }
                case GenLayerKind::Clip: {
                    Tensor<T> dx = hard_clip_backward(in, dy, T(-1), T(1));
                    accumulate(douts[static_cast<std::size_t>(i - 1)], dx);
                    break;
                }
            }
            dy_full = Tensor<T>();  // free as we walk
        }
    }

    void zero_grads() {
        for (Layer& L : layers_) {
            if (!L.dw.empty()) L.dw.fill(T(0));
            if (!L.db.empty()) L.db.fill(T(0));
            if (!L.dgamma.empty()) L.dgamma.fill(T(0));
            if (!L.dbeta.empty()) L.dbeta.fill(T(0));
        }
    }

    std::vector<ParamEntry<T>> params() {
        std::vector<ParamEntry<T>> out;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            Layer& L = layers_[i];
            char id[8];
            std::snprintf(id, sizeof id, "l%02zu", i + 1);
            const std::string prefix = std::string("g.") + id;
            if (!L.w.empty()) {
                out.push_back({prefix + ".w", &L.w, &L.dw});
                out.push_back({prefix + ".b", &L.b, &L.db});
            }
            if (L.has_norm) {
                out.push_back({prefix + ".norm.gamma", &L.gamma, &L.dgamma});
                out.push_back({prefix + ".norm.beta", &L.beta, &L.dbeta});
            }
        }
        return out;
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (const auto& p : params()) n += p.value->size();
        return n;
    }

private:
    struct Layer {
        GenLayer meta;   // with out_ch already width-scaled
        ConvGeom geom;
        int own_ch = 0;  // channels this layer produces (pre-concat)
        Tensor<T> w, b, dw, db;
        bool has_norm = false;
        Tensor<T> gamma, beta, dgamma, dbeta;
        // caches (training-mode forward)
        Tensor<T> act_f, act_g, normed_f;
        InstanceNormCache<T> in_cache;
        int src_h = 0, src_w = 0;  // resize: source spatial size
    };

    GeneratorConfig cfg_;
    std::vector<Layer> layers_;
    std::vector<Tensor<T>> outputs_;  // [0] = net input, [i] = layer i output
    std::vector<bool> is_skip_source_;
    bool training_cached_ = false;

    void build(std::uint64_t seed) {
        Rng rng(seed);
        const auto trace = generator_trace(cfg_, 64, 64);  // spatial part unused here
        layers_.resize(cfg_.layers.size());
        is_skip_source_.assign(cfg_.layers.size() + 1, false);
        for (std::size_t i = 0; i < cfg_.layers.size(); ++i) {
            const GenLayer& meta = cfg_.layers[i];
            if (cfg_.use_skips && meta.skip_source > 0)
                is_skip_source_[static_cast<std::size_t>(meta.skip_source)] = true;
            Layer& L = layers_[i];
            L.meta = meta;
            L.own_ch = trace[i].own_ch;
            L.meta.out_ch = L.own_ch;
            L.geom = {meta.kernel, meta.stride, meta.dilation, Padding::Same};
            if (meta.kind == GenLayerKind::GatedConv || meta.kind == GenLayerKind::PlainConv) {
                const int in_ch = trace[i].in_ch;
                const int rows = meta.kind == GenLayerKind::GatedConv ? 2 * L.own_ch : L.own_ch;
                const int fan_in = in_ch * meta.kernel * meta.kernel;
                L.w = Tensor<T>({rows, fan_in});
                L.b = Tensor<T>({rows});
                init_conv_weight(L.w, fan_in, rng);
                L.dw = Tensor<T>(L.w.dims());
                L.db = Tensor<T>(L.b.dims());
            }
            if (meta.kind == GenLayerKind::GatedConv && cfg_.use_instance_norm) {
                L.has_norm = true;
                L.gamma = Tensor<T>::full({L.own_ch}, T(1));
                L.beta = Tensor<T>({L.own_ch});
                L.dgamma = Tensor<T>({L.own_ch});
                L.dbeta = Tensor<T>({L.own_ch});
            }
        }
    }

    void build_input(const Tensor<T>& z, const masking::Mask& m, Tensor<T>& input) const {
        const std::int64_t hw = static_cast<std::int64_t>(z.dim(1)) * z.dim(2);
        std::copy(z.data(), z.data() + z.size(), input.data());
        T* mask_plane = input.data() + 3 * hw;
        for (std::int64_t i = 0; i < hw; ++i) mask_plane[i] = static_cast<T>(m[i]);
        T* ones_plane = input.data() + 4 * hw;
        std::fill(ones_plane, ones_plane + hw, T(1));
    }

    Tensor<T> forward_from_input(Tensor<T> input, bool training) {
        const int n_layers = static_cast<int>(layers_.size());
        outputs_.assign(static_cast<std::size_t>(n_layers) + 1, Tensor<T>());
        outputs_[0] = std::move(input);
        training_cached_ = training;
        std::vector<std::pair<int, int>> size_stack;

        for (int i = 1; i <= n_layers; ++i) {
            Layer& L = layers_[static_cast<std::size_t>(i - 1)];
            const Tensor<T>& in = outputs_[static_cast<std::size_t>(i - 1)];
            Tensor<T> y;
            switch (L.meta.kind) {
                case GenLayerKind::GatedConv: {
                    if (L.meta.stride == 2) size_stack.emplace_back(in.dim(1), in.dim(2));
                    y = gated_forward(L, in, training);
                    break;
                }
                case GenLayerKind::PlainConv:
                    y = conv2d(in, L.w, &L.b, L.geom);
                    break;
                case GenLayerKind::Resize: {
                    if (size_stack.empty())
                        throw ShapeError("generator: resize without a matching encoder stage");
                    const auto [th, tw] = size_stack.back();
                    size_stack.pop_back();
                    L.src_h = in.dim(1);
                    L.src_w = in.dim(2);
                    y = bilinear_resize(in, th, tw);
                    break;
                }
                case GenLayerKind::Clip:
                    y = hard_clip(in, T(-1), T(1));
                    break;
            }
            if (L.meta.skip_source > 0 && cfg_.use_skips)
                y = concat_channels(y, outputs_[static_cast<std::size_t>(L.meta.skip_source)]);
            outputs_[static_cast<std::size_t>(i)] = std::move(y);
            if (!training && i >= 2 && !is_skip_source_[static_cast<std::size_t>(i - 1)])
                outputs_[static_cast<std::size_t>(i - 1)] = Tensor<T>();
        }
        return outputs_[static_cast<std::size_t>(n_layers)];
    }

    Tensor<T> gated_forward(Layer& L, const Tensor<T>& in, bool training) {
        const Tensor<T> pre = conv2d(in, L.w, &L.b, L.geom);
        const int c = L.own_ch, oh = pre.dim(1), ow = pre.dim(2);
        const std::int64_t plane = static_cast<std::int64_t>(oh) * ow;
        Tensor<T> f({c, oh, ow}), g({c, oh, ow});
        std::copy(pre.data(), pre.data() + c * plane, f.data());
        std::copy(pre.data() + c * plane, pre.data() + 2 * c * plane, g.data());

        Tensor<T> act_f = elu(f, static_cast<T>(cfg_.elu_alpha));
        Tensor<T> act_g = sigmoid(g);
        Tensor<T> y;
        if (L.has_norm && cfg_.norm_before_gating) {
            Tensor<T> normed =
                instance_norm(act_f, L.gamma, L.beta, T(1e-5), training ? &L.in_cache : nullptr);
            y = Tensor<T>(normed.dims());
            kernels::mul(normed.data(), act_g.data(), y.data(),
                         static_cast<std::size_t>(y.size()));
            if (training) L.normed_f = std::move(normed);
        } else {
            Tensor<T> gated(act_f.dims());
            kernels::mul(act_f.data(), act_g.data(), gated.data(),
                         static_cast<std::size_t>(gated.size()));
            y = L.has_norm ? instance_norm(gated, L.gamma, L.beta, T(1e-5),
                                           training ? &L.in_cache : nullptr)
                           : std::move(gated);
        }
        if (training) {
            L.act_f = std::move(act_f);
            L.act_g = std::move(act_g);
        }
        return y;
    }

    // dy (own_ch) -> gradient of the 2C-channel conv pre-activation.
    Tensor<T> gated_backward(Layer& L, const Tensor<T>& dy) {
        const int c = L.own_ch, oh = dy.dim(1), ow = dy.dim(2);
        const std::int64_t plane = static_cast<std::int64_t>(oh) * ow;
        Tensor<T> df({c, oh, ow}), dg({c, oh, ow});
        if (L.has_norm && cfg_.norm_before_gating) {
            // y = IN(ELU(f)) * sig(g)
            Tensor<T> dnormed(dy.dims());
            kernels::mul(dy.data(), L.act_g.data(), dnormed.data(),
                         static_cast<std::size_t>(dy.size()));
            kernels::mul(dy.data(), L.normed_f.data(), dg.data(),
                         static_cast<std::size_t>(dy.size()));
            df = instance_norm_backward(dnormed, L.in_cache, L.gamma, &L.dgamma, &L.dbeta);
        } else {
            Tensor<T> dgated = L.has_norm ? instance_norm_backward(dy, L.in_cache, L.gamma,
                                                                   &L.dgamma, &L.dbeta)
                                          : dy;
            kernels::mul(dgated.data(), L.act_g.data(), df.data(),
                         static_cast<std::size_t>(df.size()));
            kernels::mul(dgated.data(), L.act_f.data(), dg.data(),
                         static_cast<std::size_t>(dg.size()));
        }
        Tensor<T> dpre_f = elu_backward(L.act_f, df, static_cast<T>(cfg_.elu_alpha));
        Tensor<T> dpre_g = sigmoid_backward(L.act_g, dg);
        Tensor<T> dpre({2 * c, oh, ow});
        std::copy(dpre_f.data(), dpre_f.data() + c * plane, dpre.data());
        std::copy(dpre_g.data(), dpre_g.data() + c * plane, dpre.data() + c * plane);
        return dpre;
    }

    static void accumulate(Tensor<T>& dst, const Tensor<T>& inc) {
        if (dst.empty()) {
            dst = inc;
            return;
        }
        kernels::add(dst.data(), inc.data(), dst.data(), static_cast<std::size_t>(dst.size()));
    }
};

}  // namespace outpaint::nn
