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
#include <string>
#include <vector>

#include "outpaint/conditioning.hpp"
#include "outpaint/core/errors.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/kernels/kernels.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/nn/discriminator.hpp"

namespace outpaint::losses {

// ---------------------------------------------------------------------------
// Objectives: l1 reconstruction on the full generator output, the hinge
// adversarial pair, and the optional stabilizers (perceptual logit matching
// and discriminator feature matching). The critic's projection conditioning
// is itself the default stabilizer and lives in the discriminator; it needs
// no term here.
// ---------------------------------------------------------------------------

enum class Stabilizer {
    ProjectionConditioning,  // default: conditioning only, no extra loss term
    FeatureMatching,
    Perceptual,
    Combo,  // conditioning + both auxiliary terms
};

struct LossWeights {
    double lambda_adv = 1e-2;
    Stabilizer stabilizer = Stabilizer::ProjectionConditioning;
    double perceptual_weight = 1.0;        // Perceptual and Combo
    double feature_matching_weight = 1.0;  // FeatureMatching and Combo

    void validate() const {
        if (lambda_adv < 0) throw ConfigError("losses: lambda_adv must be >= 0");
        if (perceptual_weight < 0 || feature_matching_weight < 0)
            throw ConfigError("losses: stabilizer weights must be >= 0");
    }
};

inline const char* stabilizer_name(Stabilizer s) {
    switch (s) {
        case Stabilizer::ProjectionConditioning: return "projection_conditioning";
        case Stabilizer::FeatureMatching: return "feature_matching";
        case Stabilizer::Perceptual: return "perceptual";
        case Stabilizer::Combo: return "combo";
    }
    return "?";
}

inline Stabilizer stabilizer_from_name(const std::string& s) {
    if (s == "projection_conditioning") return Stabilizer::ProjectionConditioning;
    if (s == "feature_matching") return Stabilizer::FeatureMatching;
    if (s == "perceptual") return Stabilizer::Perceptual;
    if (s == "combo") return Stabilizer::Combo;
    throw ConfigError("losses: unknown stabilizer '" + s + "'");
}

// Mean absolute difference over every channel and pixel of the full output.
template <typename T>
T recon_loss(const Tensor<T>& x, const Tensor<T>& g_out) {
    if (!x.same_shape(g_out)) throw ShapeError("recon_loss: shape mismatch");
    const auto n = static_cast<std::size_t>(x.size());
    return kernels::abs_diff_sum(x.data(), g_out.data(), n) / static_cast<T>(n);
}

// d(recon)/d(g_out), scaled: scale * sign(g_out - x) / N. The subgradient at
// exact equality is zero.
template <typename T>
Tensor<T> recon_loss_backward(const Tensor<T>& x, const Tensor<T>& g_out, T scale) {
    if (!x.same_shape(g_out)) throw ShapeError("recon_loss: shape mismatch");
    Tensor<T> d(g_out.dims());
    const T unit = scale / static_cast<T>(x.size());
    for (std::int64_t i = 0; i < x.size(); ++i) {
        if (g_out[i] > x[i]) d[i] = unit;
        else if (g_out[i] < x[i]) d[i] = -unit;
    }
    return d;
}

// relu(1 - s_real) + relu(1 + s_fake), averaged over the batch.
template <typename T>
T hinge_d_loss(const std::vector<T>& score_real, const std::vector<T>& score_fake) {
    if (score_real.size() != score_fake.size() || score_real.empty())
        throw ShapeError("hinge_d_loss: batch size mismatch");
    T total = T(0);
    for (std::size_t i = 0; i < score_real.size(); ++i) {
        const T a = T(1) - score_real[i];
        const T b = T(1) + score_fake[i];
        total += (a > T(0) ? a : T(0)) + (b > T(0) ? b : T(0));
    }
    return total / static_cast<T>(score_real.size());
}

template <typename T>
T hinge_d_loss(T score_real, T score_fake) {
    return hinge_d_loss(std::vector<T>{score_real}, std::vector<T>{score_fake});
}

// d(hinge_d)/d(score_real), d(score_fake); zero beyond the margins.
template <typename T>
void hinge_d_backward(const std::vector<T>& score_real, const std::vector<T>& score_fake,
                      std::vector<T>& d_real, std::vector<T>& d_fake) {
    const T inv = T(1) / static_cast<T>(score_real.size());
    d_real.assign(score_real.size(), T(0));
    d_fake.assign(score_fake.size(), T(0));
    for (std::size_t i = 0; i < score_real.size(); ++i) {
        if (T(1) - score_real[i] > T(0)) d_real[i] = -inv;
        if (T(1) + score_fake[i] > T(0)) d_fake[i] = inv;
    }
}

// -mean(score_fake).
template <typename T>
T hinge_g_loss(const std::vector<T>& score_fake) {
    if (score_fake.empty()) throw ShapeError("hinge_g_loss: empty batch");
    T total = T(0);
    for (const T s : score_fake) total -= s;
    return total / static_cast<T>(score_fake.size());
}

template <typename T>
T hinge_g_loss(T score_fake) {
    return -score_fake;
}

template <typename T>
T total_g_loss(T l_rec, T l_adv_g, const LossWeights& w) {
    return l_rec + static_cast<T>(w.lambda_adv) * l_adv_g;
}

// Squared l2 distance between the raw (pre-normalization) embeddings of the
// two images, divided by the embedding width.
inline float perceptual_loss(const conditioning::EmbeddingProvider& provider,
                             const TensorF& x, const TensorF& x_hat) {
    const TensorF ex = provider.embed(x);
    const TensorF eh = provider.embed(x_hat);
    double sq = 0.0;
    for (std::int64_t i = 0; i < ex.size(); ++i) {
        const double d = static_cast<double>(eh[i]) - ex[i];
        sq += d * d;
    }
    return static_cast<float>(sq / provider.dim());
}

// Same value, plus d(loss)/d(x_hat) pulled back through the provider.
// Providers without gradients (the classifier path) raise ConfigError.
inline float perceptual_loss_with_grad(const conditioning::EmbeddingProvider& provider,
                                       const TensorF& x, const TensorF& x_hat,
                                       float weight, TensorF& dx_hat) {
    const TensorF ex = provider.embed(x);
    const TensorF eh = provider.embed(x_hat);
    const int dim = provider.dim();
    TensorF dembed({dim});
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double d = static_cast<double>(eh[i]) - ex[i];
        sq += d * d;
        dembed[i] = static_cast<float>(2.0 * d / dim) * weight;
    }
    if (!provider.embed_backward(x_hat, dembed, dx_hat))
        throw ConfigError(
            "perceptual stabilizer requires a differentiable embedding provider "
            "(the deterministic stub); the classifier path has no gradients");
    return static_cast<float>(sq / dim);
}

// Sum over tower layers of the per-element mean absolute difference between
// the post-activation features of (x, m) and (x_hat, m). Leaves the
// discriminator's caches on the x_hat forward.
template <typename T>
struct FeatureMatchResult {
    T value = T(0);
    // d(value)/d(features of x_hat), layer by layer, scaled by the caller's
    // weight; feed to Discriminator::backward_feature_grads.
    std::vector<Tensor<T>> dacts_fake;
};

template <typename T>
FeatureMatchResult<T> feature_matching_with_grad(nn::Discriminator<T>& d,
                                                 const Tensor<T>& x,
                                                 const Tensor<T>& x_hat,
                                                 const masking::Mask& m, T weight) {
    (void)d.score(x, m, nullptr, /*training=*/true);
    const std::vector<Tensor<T>> real = d.tower_activations();
    (void)d.score(x_hat, m, nullptr, /*training=*/true);
    const std::vector<Tensor<T>> fake = d.tower_activations();

    FeatureMatchResult<T> r;
    r.dacts_fake.resize(fake.size());
    for (std::size_t l = 0; l < fake.size(); ++l) {
        const auto n = static_cast<std::size_t>(fake[l].size());
        r.value += kernels::abs_diff_sum(fake[l].data(), real[l].data(), n) /
                   static_cast<T>(n);
        Tensor<T> g(fake[l].dims());
        const T unit = weight / static_cast<T>(n);
        for (std::int64_t i = 0; i < fake[l].size(); ++i) {
            if (fake[l][i] > real[l][i]) g[i] = unit;
            else if (fake[l][i] < real[l][i]) g[i] = -unit;
        }
        r.dacts_fake[l] = std::move(g);
    }
    return r;
}

// Value-only form for evaluation and tests.
template <typename T>
T feature_matching_loss(nn::Discriminator<T>& d, const Tensor<T>& x,
                        const Tensor<T>& x_hat, const masking::Mask& m) {
    return feature_matching_with_grad(d, x, x_hat, m, T(1)).value;
}

}  // namespace outpaint::losses
