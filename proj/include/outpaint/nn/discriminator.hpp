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
#include <utility>
#include <vector>

#include "outpaint/core/errors.hpp"
#include "outpaint/core/rng.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/nn/ops.hpp"
#include "outpaint/nn/params.hpp"
#include "outpaint/nn/spectral_norm.hpp"

namespace outpaint::nn {

// ---------------------------------------------------------------------------
// Critic: a spectrally normalized conv tower phi over [image, mask], a
// bias-free fully connected head f_phi(phi) -> scalar, and a bias-free
// projection branch <phi, f_C(c)> conditioned on a precomputed embedding of
// the ground-truth image. The two scalars are summed.
// ---------------------------------------------------------------------------

struct DiscriminatorConfig {
    std::vector<int> tower_channels = {64, 128, 256, 256, 256, 256, 256};
    std::vector<int> tower_strides = {2, 2, 2, 2, 2, 2, 1};
    int tower_kernel = 5;
    double width_multiplier = 1.0;
    int embed_dim = 1000;
    bool use_conditioning = true;
    double leaky_slope = 0.2;
    int input_size = 257;  // square spatial size the tower is built for
    int in_channels = 4;   // [image (3), mask (1)]
};

struct DiscTraceEntry {
    int ch;
    int h, w;
};

// Spatial/channel walk of the tower for a given input size. The last conv
// uses Valid padding with its kernel bound to the remaining spatial extent,
// so the trace always ends at 1x1 (default 257 ends 129, 65, 33, 17, 9, 5, 1
// with the reference kernel of 5).
std::vector<DiscTraceEntry> discriminator_trace(const DiscriminatorConfig& cfg, int h, int w);

// Kernel of the final Valid conv for this input size.
int discriminator_final_kernel(const DiscriminatorConfig& cfg);

// Width-scaled output dimension of the tower (also the f_C output size).
int discriminator_proj_dim(const DiscriminatorConfig& cfg);

std::int64_t discriminator_param_count(const DiscriminatorConfig& cfg);

template <typename T>
class Discriminator {
public:
    Discriminator(DiscriminatorConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
        build(seed);
    }

    const DiscriminatorConfig& config() const { return cfg_; }
    int proj_dim() const { return proj_dim_; }

    // One power iteration on every spectrally normalized layer. Called once
    // per training step; every score/backward within the step then sees the
    // same frozen (u, v).
    void advance_spectral_norm() {
        for (auto& L : convs_) L.sn.advance(L.w);
        fphi_.sn.advance(fphi_.w);
        if (cfg_.use_conditioning) fc_.sn.advance(fc_.w);
    }

    // D(x*, M, c). Pass c = nullptr for the unconditional score. `training`
    // keeps the activation caches for backward().
    T score(const Tensor<T>& image, const masking::Mask& m, const Tensor<T>* c,
            bool training = true) {
        if (image.rank() != 3 || image.dim(0) != 3)
            throw ShapeError("discriminator: image must be (3, H, W)");
        if (image.dim(1) != cfg_.input_size || image.dim(2) != cfg_.input_size)
            throw ShapeError("discriminator: input size does not match the tower build");
        if (m.dim(0) != image.dim(1) || m.dim(1) != image.dim(2))
            throw ShapeError("discriminator: mask does not match the image");
        if (c && c->size() != cfg_.embed_dim)
            throw ShapeError("discriminator: conditioning vector has wrong dimension");

        refresh_normalized();
        training_cached_ = training;

        Tensor<T> x({cfg_.in_channels, image.dim(1), image.dim(2)});
        const std::int64_t hw = static_cast<std::int64_t>(image.dim(1)) * image.dim(2);
        std::copy(image.data(), image.data() + image.size(), x.data());
        T* mask_plane = x.data() + 3 * hw;
        for (std::int64_t i = 0; i < hw; ++i) mask_plane[i] = static_cast<T>(m[i]);

        for (auto& L : convs_) {
            if (training) L.input = x;
            Tensor<T> pre = conv2d(x, L.wbar, &L.b, L.geom);
            Tensor<T> act = leaky_relu(pre, static_cast<T>(cfg_.leaky_slope));
            if (training) L.pre = std::move(pre);
            x = std::move(act);
        }
        if (x.dim(1) != 1 || x.dim(2) != 1)
            throw ShapeError("discriminator: tower did not collapse to 1x1");

        phi_ = Tensor<T>({proj_dim_});
        std::copy(x.data(), x.data() + x.size(), phi_.data());

        T s = fc(phi_, fphi_.wbar, nullptr)[0];
        has_cond_ = cfg_.use_conditioning && c != nullptr;
        if (has_cond_) {
            cond_ = *c;
            proj_ = fc(cond_, fc_.wbar, nullptr);
            s += kernels::dot(phi_.data(), proj_.data(), static_cast<std::size_t>(proj_dim_));
        }
        return s;
    }

    // Gradients from d(loss)/d(score). Param grads accumulate only when
    // requested (the generator's adversarial pass keeps D frozen); returns
    // dL/d(image) when want_dinput is set, else an empty tensor.
    Tensor<T> backward(T dscore, bool want_dinput, bool accumulate_params) {
        if (!training_cached_) throw Error("discriminator backward: no cached forward pass");
        // dphi from both heads.
        Tensor<T> dphi({proj_dim_});
        kernels::axpy(dscore, fphi_.wbar.data(), dphi.data(),
                      static_cast<std::size_t>(proj_dim_));
        if (has_cond_)
            kernels::axpy(dscore, proj_.data(), dphi.data(),
                          static_cast<std::size_t>(proj_dim_));
        if (accumulate_params) {
            // f_phi: score term is <wbar_row, phi>.
            Tensor<T> g({1, proj_dim_});
            kernels::axpy(dscore, phi_.data(), g.data(), static_cast<std::size_t>(proj_dim_));
            fphi_.sn.backward(fphi_.wbar, fphi_.sigma, g, fphi_.dw);
            if (has_cond_) {
                // projection term: phi^T (Wbar c) -> dWbar = dscore * phi c^T.
                Tensor<T> gc({proj_dim_, cfg_.embed_dim});
                for (int i = 0; i < proj_dim_; ++i)
                    kernels::axpy(dscore * phi_[i], cond_.data(),
                                  gc.data() + static_cast<std::int64_t>(i) * cfg_.embed_dim,
                                  static_cast<std::size_t>(cfg_.embed_dim));
                fc_.sn.backward(fc_.wbar, fc_.sigma, gc, fc_.dw);
            }
        }
        return tower_backward(std::move(dphi), nullptr, want_dinput, accumulate_params);
    }

    // Post-activation conv-tower features of the last training forward,
    // outermost first; used by the feature-matching stabilizer.
    std::vector<Tensor<T>> tower_activations() const {
        if (!training_cached_) throw Error("discriminator: no cached forward pass");
        std::vector<Tensor<T>> acts;
        acts.reserve(convs_.size());
        for (const auto& L : convs_)
            acts.push_back(leaky_relu(L.pre, static_cast<T>(cfg_.leaky_slope)));
        return acts;
    }

    // Backward from per-layer post-activation gradients (feature matching);
    // entries may be empty for layers without a contribution.
    Tensor<T> backward_feature_grads(const std::vector<Tensor<T>>& dacts, bool want_dinput,
                                     bool accumulate_params) {
        if (!training_cached_) throw Error("discriminator backward: no cached forward pass");
        if (dacts.size() != convs_.size())
            throw ShapeError("discriminator: feature gradient count mismatch");
        return tower_backward(Tensor<T>(), &dacts, want_dinput, accumulate_params);
    }

    void zero_grads() {
        for (auto& L : convs_) {
            L.dw.fill(T(0));
            L.db.fill(T(0));
        }
        fphi_.dw.fill(T(0));
        if (cfg_.use_conditioning) fc_.dw.fill(T(0));
    }

    std::vector<ParamEntry<T>> params() {
        std::vector<ParamEntry<T>> out;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            char id[8];
            std::snprintf(id, sizeof id, "l%zu", i + 1);
            const std::string prefix = std::string("d.") + id;
            out.push_back({prefix + ".w", &convs_[i].w, &convs_[i].dw});
            out.push_back({prefix + ".b", &convs_[i].b, &convs_[i].db});
        }
        out.push_back({"d.fphi.w", &fphi_.w, &fphi_.dw});
        if (cfg_.use_conditioning) out.push_back({"d.fc.w", &fc_.w, &fc_.dw});
        return out;
    }

    // Power-iteration state, serialized alongside the parameters.
    std::vector<std::pair<std::string, Tensor<T>*>> sn_state() {
        std::vector<std::pair<std::string, Tensor<T>*>> out;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            char id[8];
            std::snprintf(id, sizeof id, "l%zu", i + 1);
            const std::string prefix = std::string("d.") + id + ".sn.";
            out.emplace_back(prefix + "u", &convs_[i].sn.u);
            out.emplace_back(prefix + "v", &convs_[i].sn.v);
        }
        out.emplace_back("d.fphi.sn.u", &fphi_.sn.u);
        out.emplace_back("d.fphi.sn.v", &fphi_.sn.v);
        if (cfg_.use_conditioning) {
            out.emplace_back("d.fc.sn.u", &fc_.sn.u);
            out.emplace_back("d.fc.sn.v", &fc_.sn.v);
        }
        return out;
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (const auto& p : params()) n += p.value->size();
        return n;
    }

    // Top singular value estimates of the normalized weights, for tests.
    std::vector<Tensor<T>> normalized_weights() {
        refresh_normalized();
        std::vector<Tensor<T>> out;
        for (auto& L : convs_) out.push_back(L.wbar);
        out.push_back(fphi_.wbar);
        if (cfg_.use_conditioning) out.push_back(fc_.wbar);
        return out;
    }

private:
    struct SnLayer {
        Tensor<T> w, dw;    // raw weight and its gradient
        Tensor<T> wbar;     // w / sigma with the current (u, v)
        T sigma = T(1);
        SpectralNorm<T> sn;
    };
    struct ConvLayer : SnLayer {
        Tensor<T> b, db;
        ConvGeom geom;
        Tensor<T> input, pre;  // training caches
    };

    DiscriminatorConfig cfg_;
    std::vector<ConvLayer> convs_;
    SnLayer fphi_, fc_;
    int proj_dim_ = 0;
    bool training_cached_ = false;
    bool has_cond_ = false;
    Tensor<T> phi_, cond_, proj_;

    void build(std::uint64_t seed) {
        if (cfg_.tower_channels.size() != cfg_.tower_strides.size())
            throw ConfigError("discriminator: channel/stride tables differ in length");
        Rng rng(seed);
        proj_dim_ = discriminator_proj_dim(cfg_);
        const int final_k = discriminator_final_kernel(cfg_);
        convs_.resize(cfg_.tower_channels.size());
        int in_ch = cfg_.in_channels;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            ConvLayer& L = convs_[i];
            const bool last = i + 1 == convs_.size();
            L.geom.kernel = last ? final_k : cfg_.tower_kernel;
            L.geom.stride = cfg_.tower_strides[i];
            L.geom.dilation = 1;
            L.geom.padding = last ? Padding::Valid : Padding::Same;
            const int out_ch = scaled_channels(cfg_.tower_channels[i], cfg_.width_multiplier);
            const int fan_in = in_ch * L.geom.kernel * L.geom.kernel;
            L.w = Tensor<T>({out_ch, fan_in});
            init_conv_weight(L.w, fan_in, rng);
            L.b = Tensor<T>({out_ch});
            L.dw = Tensor<T>(L.w.dims());
            L.db = Tensor<T>(L.b.dims());
            L.sn.init(out_ch, fan_in, rng);
            in_ch = out_ch;
        }
        fphi_.w = Tensor<T>({1, proj_dim_});
        init_conv_weight(fphi_.w, proj_dim_, rng);
        fphi_.dw = Tensor<T>(fphi_.w.dims());
        fphi_.sn.init(1, proj_dim_, rng);
        if (cfg_.use_conditioning) {
            fc_.w = Tensor<T>({proj_dim_, cfg_.embed_dim});
            init_conv_weight(fc_.w, cfg_.embed_dim, rng);
            fc_.dw = Tensor<T>(fc_.w.dims());
            fc_.sn.init(proj_dim_, cfg_.embed_dim, rng);
        }
    }

    void refresh_normalized() {
        for (auto& L : convs_) L.sigma = L.sn.normalize_into(L.w, L.wbar);
        fphi_.sigma = fphi_.sn.normalize_into(fphi_.w, fphi_.wbar);
        if (cfg_.use_conditioning) fc_.sigma = fc_.sn.normalize_into(fc_.w, fc_.wbar);
    }

    Tensor<T> tower_backward(Tensor<T> dphi, const std::vector<Tensor<T>>* dacts,
                             bool want_dinput, bool accumulate_params) {
        Tensor<T> dact;
        if (!dphi.empty()) {
            dact = Tensor<T>({proj_dim_, 1, 1});
            std::copy(dphi.data(), dphi.data() + dphi.size(), dact.data());
        }
        for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
            ConvLayer& L = convs_[static_cast<std::size_t>(i)];
            if (dacts && !(*dacts)[static_cast<std::size_t>(i)].empty()) {
                const Tensor<T>& extra = (*dacts)[static_cast<std::size_t>(i)];
                if (dact.empty())
                    dact = extra;
                else
                    kernels::add(dact.data(), extra.data(), dact.data(),
                                 static_cast<std::size_t>(dact.size()));
            }
            if (dact.empty()) continue;
            Tensor<T> dpre =
                leaky_relu_backward(L.pre, dact, static_cast<T>(cfg_.leaky_slope));
            const bool need_dx = i > 0 || want_dinput;
            Tensor<T> dx;
            if (accumulate_params) {
                Tensor<T> dwbar(L.w.dims());
                conv2d_backward(L.input, L.wbar, L.geom, dpre, need_dx ? &dx : nullptr,
                                &dwbar, &L.db);
                L.sn.backward(L.wbar, L.sigma, dwbar, L.dw);
            } else {
                conv2d_backward(L.input, L.wbar, L.geom, dpre, need_dx ? &dx : nullptr,
                                nullptr, nullptr);
            }
            dact = std::move(dx);
        }
        if (!want_dinput) return Tensor<T>();
        // Strip the mask channel: only the image part backpropagates further.
        Tensor<T> dimage({3, cfg_.input_size, cfg_.input_size});
        std::copy(dact.data(), dact.data() + dimage.size(), dimage.data());
        return dimage;
    }
};

}  // namespace outpaint::nn
