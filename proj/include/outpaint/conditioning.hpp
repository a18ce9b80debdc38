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
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "outpaint/core/errors.hpp"
#include "outpaint/core/tensor.hpp"

namespace outpaint::conditioning {

// ---------------------------------------------------------------------------
// Semantic embeddings of ground-truth images. The critic's projection branch
// and the perceptual stabilizer both consume fixed-width vectors; where those
// vectors come from is hidden behind EmbeddingProvider. Two providers exist:
// a deterministic stub that needs no external weights (pixels are average-
// pooled onto a coarse grid and pushed through a seeded random projection)
// and a forward-only classifier loaded from a weights file, used with its
// final softmax removed so the raw logits act as the embedding.
// ---------------------------------------------------------------------------

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual int dim() const = 0;
    virtual std::string kind() const = 0;
    // Raw (unnormalized) embedding of an image in [-1, 1], shape (3, H, W).
    virtual TensorF embed(const TensorF& x) const = 0;
    // d(embedding)/d(pixels) pullback for differentiable providers; returns
    // false when the provider cannot propagate gradients (classifier path).
    virtual bool embed_backward(const TensorF& x, const TensorF& dembed,
                                TensorF& dx) const {
        (void)x;
        (void)dembed;
        (void)dx;
        return false;
    }
};

// Deterministic stub: channelwise average pooling onto a pool x pool grid,
// then a dense seeded normal projection to embed_dim. Linear in the pixels,
// so the exact gradient pullback is available for the perceptual stabilizer.
class StubProvider final : public EmbeddingProvider {
public:
    static constexpr int kPool = 8;

    explicit StubProvider(int embed_dim, std::uint64_t seed = 0x0u);

    int dim() const override { return embed_dim_; }
    std::string kind() const override { return "deterministic_stub"; }
    TensorF embed(const TensorF& x) const override;
    bool embed_backward(const TensorF& x, const TensorF& dembed,
                        TensorF& dx) const override;

private:
    int embed_dim_;
    TensorF proj_;  // (embed_dim, 3 * kPool * kPool)

    TensorF pool(const TensorF& x) const;
    void pool_backward(const TensorF& x, const TensorF& dpooled, TensorF& dx) const;
};

// ---------------------------------------------------------------------------
// Forward-only sequential classifier ("OPNT" weights file): conv / relu /
// maxpool / global average pool / flatten / fully connected. Enough to run a
// small pretrained network to its logits; nothing here trains.
// ---------------------------------------------------------------------------

struct SavedNetLayer {
    enum class Kind : std::uint32_t {
        Conv = 0,      // kernel, stride, same_pad, weights (out_ch, in*k*k), bias
        Relu = 1,
        MaxPool = 2,   // kernel, stride, valid padding
        GlobalAvgPool = 3,
        Flatten = 4,
        Fc = 5,        // weights (out, in), bias
    };
    Kind kind = Kind::Relu;
    int kernel = 0;
    int stride = 0;
    int same_pad = 0;  // conv only: 1 = Same, 0 = Valid
    TensorF w;         // conv / fc
    TensorF b;         // conv / fc
};

struct SavedNet {
    int in_channels = 3;
    std::vector<SavedNetLayer> layers;

    // Runs the net and returns the final rank-1 output (the logits).
    TensorF forward(const TensorF& x) const;

    void save(const std::string& path) const;
    static SavedNet load(const std::string& path);
};

// Classifier-backed provider; logits are the embedding ("softmax removed").
class PretrainedLogitsProvider final : public EmbeddingProvider {
public:
    // Loads the weights file and checks the output width. Missing or invalid
    // files raise DataError.
    PretrainedLogitsProvider(const std::string& weights_path, int embed_dim);

    int dim() const override { return embed_dim_; }
    std::string kind() const override { return "pretrained_classifier_logits"; }
    TensorF embed(const TensorF& x) const override;

    const SavedNet& net() const { return net_; }

private:
    int embed_dim_;
    SavedNet net_;
};

// ---------------------------------------------------------------------------
// Normalization statistics and the precomputed cache.
// ---------------------------------------------------------------------------

struct EmbeddingStats {
    std::vector<double> mean;  // dataset mean of the raw embeddings
    std::int64_t count = 0;

    void save(const std::string& path) const;
    static EmbeddingStats load(const std::string& path);
};

// Arithmetic mean of raw embeddings over `count` images served by `loader`.
EmbeddingStats fit_stats(const EmbeddingProvider& provider, int count,
                         const std::function<TensorF(int)>& loader);

// (raw - mean) / l2. Throws NumericError when the residual norm is below
// 1e-12 (the zero vector is a valid conditioning input downstream, so callers
// that prefer substitution use normalize_or_zero).
TensorF normalize(const TensorF& raw, const EmbeddingStats& stats);

// Same, but degenerate embeddings become the zero vector; returns whether the
// result is degenerate.
bool normalize_or_zero(const TensorF& raw, const EmbeddingStats& stats, TensorF& out);

// Precomputed id -> normalized-vector map. Training never touches a provider;
// it reads this cache alone.
class EmbeddingCache {
public:
    void insert(const std::string& id, TensorF vec);
    const TensorF& lookup(const std::string& id) const;  // DataError on miss
    bool contains(const std::string& id) const;
    std::size_t size() const { return entries_.size(); }
    int dim() const { return dim_; }

    void save(const std::string& path) const;
    static EmbeddingCache load(const std::string& path);

private:
    int dim_ = -1;
    std::vector<std::string> order_;  // file order is insertion order
    std::unordered_map<std::string, TensorF> entries_;
};

// Embeds, normalizes (zero-substituting degenerates), and caches `count`
// images. Returns the number of degenerate embeddings encountered.
int precompute_cache(const EmbeddingProvider& provider, const EmbeddingStats& stats,
                     const std::vector<std::string>& ids,
                     const std::function<TensorF(int)>& loader, EmbeddingCache& cache);

}  // namespace outpaint::conditioning
