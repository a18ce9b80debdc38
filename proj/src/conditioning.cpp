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

#include "outpaint/conditioning.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "outpaint/core/binio.hpp"
#include "outpaint/core/rng.hpp"
#include "outpaint/nn/ops.hpp"

namespace outpaint::conditioning {

namespace {

constexpr std::uint32_t kFormatVersion = 1;
constexpr char kNetMagic[4] = {'O', 'P', 'N', 'T'};
constexpr char kCacheMagic[4] = {'O', 'P', 'E', 'C'};
constexpr char kStatsMagic[4] = {'O', 'P', 'E', 'S'};

void check_image(const TensorF& x) {
    if (x.rank() != 3 || x.dim(0) != 3)
        throw ShapeError("embedding: image must be (3, H, W)");
    if (x.dim(1) < StubProvider::kPool || x.dim(2) < StubProvider::kPool)
        throw ShapeError("embedding: image smaller than the pooling grid");
}

}  // namespace

// ---------------------------------------------------------------------------
// StubProvider
// ---------------------------------------------------------------------------

StubProvider::StubProvider(int embed_dim, std::uint64_t seed) : embed_dim_(embed_dim) {
    if (embed_dim < 1) throw ConfigError("embedding: embed_dim must be positive");
    const int in = 3 * kPool * kPool;
    proj_ = TensorF({embed_dim, in});
    Rng rng(seed ^ 0x9a3c01dbeef5ULL);
    const float scale = 1.0f / std::sqrt(static_cast<float>(in));
    for (std::int64_t i = 0; i < proj_.size(); ++i)
        proj_[i] = static_cast<float>(rng.normal()) * scale;
}

TensorF StubProvider::pool(const TensorF& x) const {
    check_image(x);
    const int h = x.dim(1), w = x.dim(2);
    TensorF out({3 * kPool * kPool});
    int idx = 0;
    for (int c = 0; c < 3; ++c)
        for (int py = 0; py < kPool; ++py)
            for (int px = 0; px < kPool; ++px) {
                const int y0 = py * h / kPool, y1 = (py + 1) * h / kPool;
                const int x0 = px * w / kPool, x1 = (px + 1) * w / kPool;
                double acc = 0.0;
                for (int y = y0; y < y1; ++y)
                    for (int xx = x0; xx < x1; ++xx) acc += x.at(c, y, xx);
                out[idx++] = static_cast<float>(acc / ((y1 - y0) * (x1 - x0)));
            }
    return out;
}

void StubProvider::pool_backward(const TensorF& x, const TensorF& dpooled,
                                 TensorF& dx) const {
    const int h = x.dim(1), w = x.dim(2);
    dx = TensorF(x.dims());
    int idx = 0;
    for (int c = 0; c < 3; ++c)
        for (int py = 0; py < kPool; ++py)
            for (int px = 0; px < kPool; ++px) {
                const int y0 = py * h / kPool, y1 = (py + 1) * h / kPool;
                const int x0 = px * w / kPool, x1 = (px + 1) * w / kPool;
                const float g = dpooled[idx++] / static_cast<float>((y1 - y0) * (x1 - x0));
                for (int y = y0; y < y1; ++y)
                    for (int xx = x0; xx < x1; ++xx) dx.at(c, y, xx) += g;
            }
}

TensorF StubProvider::embed(const TensorF& x) const {
    const TensorF pooled = pool(x);
    const int in = 3 * kPool * kPool;
    TensorF out({embed_dim_});
    // Plain serial dots: the embedding must be byte-for-byte reproducible no
    // matter which kernel backend the process selected.
    for (int e = 0; e < embed_dim_; ++e) {
        const float* row = proj_.data() + static_cast<std::int64_t>(e) * in;
        float acc = 0.0f;
        for (int i = 0; i < in; ++i) acc += row[i] * pooled[i];
        out[e] = acc;
    }
    return out;
}

bool StubProvider::embed_backward(const TensorF& x, const TensorF& dembed,
                                  TensorF& dx) const {
    check_image(x);
    if (dembed.size() != embed_dim_)
        throw ShapeError("embedding backward: gradient width mismatch");
    const int in = 3 * kPool * kPool;
    TensorF dpooled({in});
    for (int e = 0; e < embed_dim_; ++e) {
        const float* row = proj_.data() + static_cast<std::int64_t>(e) * in;
        const float g = dembed[e];
        for (int i = 0; i < in; ++i) dpooled[i] += g * row[i];
    }
    pool_backward(x, dpooled, dx);
    return true;
}

// ---------------------------------------------------------------------------
// SavedNet
// ---------------------------------------------------------------------------

TensorF SavedNet::forward(const TensorF& x) const {
    if (x.rank() != 3 || x.dim(0) != in_channels)
        throw ShapeError("classifier: input channel mismatch");
    TensorF cur = x;
    for (const auto& L : layers) {
        switch (L.kind) {
            case SavedNetLayer::Kind::Conv: {
                const nn::ConvGeom g{L.kernel, L.stride, 1,
                                     L.same_pad ? nn::Padding::Same : nn::Padding::Valid};
                cur = nn::conv2d(cur, L.w, &L.b, g);
                break;
            }
            case SavedNetLayer::Kind::Relu: {
                for (std::int64_t i = 0; i < cur.size(); ++i)
                    if (cur[i] < 0.0f) cur[i] = 0.0f;
                break;
            }
            case SavedNetLayer::Kind::MaxPool: {
                if (cur.rank() != 3) throw ShapeError("classifier: maxpool needs (C, H, W)");
                const int c = cur.dim(0), h = cur.dim(1), w = cur.dim(2);
                const int oh = (h - L.kernel) / L.stride + 1;
                const int ow = (w - L.kernel) / L.stride + 1;
                if (oh < 1 || ow < 1) throw ShapeError("classifier: maxpool underflow");
                TensorF out({c, oh, ow});
                for (int ch = 0; ch < c; ++ch)
                    for (int oy = 0; oy < oh; ++oy)
                        for (int ox = 0; ox < ow; ++ox) {
                            float m = cur.at(ch, oy * L.stride, ox * L.stride);
                            for (int ky = 0; ky < L.kernel; ++ky)
                                for (int kx = 0; kx < L.kernel; ++kx)
                                    m = std::max(m, cur.at(ch, oy * L.stride + ky,
                                                           ox * L.stride + kx));
                            out.at(ch, oy, ox) = m;
                        }
                cur = std::move(out);
                break;
            }
            case SavedNetLayer::Kind::GlobalAvgPool: {
                if (cur.rank() != 3) throw ShapeError("classifier: pool needs (C, H, W)");
                const int c = cur.dim(0);
                const std::int64_t hw = static_cast<std::int64_t>(cur.dim(1)) * cur.dim(2);
                TensorF out({c});
                for (int ch = 0; ch < c; ++ch) {
                    double acc = 0.0;
                    const float* p = cur.data() + ch * hw;
                    for (std::int64_t i = 0; i < hw; ++i) acc += p[i];
                    out[ch] = static_cast<float>(acc / static_cast<double>(hw));
                }
                cur = std::move(out);
                break;
            }
            case SavedNetLayer::Kind::Flatten: {
                TensorF out({static_cast<int>(cur.size())});
                std::copy(cur.data(), cur.data() + cur.size(), out.data());
                cur = std::move(out);
                break;
            }
            case SavedNetLayer::Kind::Fc: {
                if (cur.rank() != 1) throw ShapeError("classifier: fc needs a flat input");
                cur = nn::fc(cur, L.w, &L.b);
                break;
            }
        }
    }
    if (cur.rank() != 1) throw ShapeError("classifier: output is not a vector");
    return cur;
}

void SavedNet::save(const std::string& path) const {
    binio::atomic_write(path, [&](std::ostream& out) {
        binio::put_header(out, kNetMagic, kFormatVersion);
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(in_channels));
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(layers.size()));
        for (const auto& L : layers) {
            binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(L.kind));
            binio::put<std::int32_t>(out, L.kernel);
            binio::put<std::int32_t>(out, L.stride);
            binio::put<std::int32_t>(out, L.same_pad);
            const bool has_w = L.kind == SavedNetLayer::Kind::Conv ||
                               L.kind == SavedNetLayer::Kind::Fc;
            binio::put<std::uint32_t>(out, has_w ? static_cast<std::uint32_t>(L.w.dim(0)) : 0);
            binio::put<std::uint32_t>(out, has_w ? static_cast<std::uint32_t>(L.w.dim(1)) : 0);
            if (has_w) {
                binio::put_array(out, L.w.data(), static_cast<std::size_t>(L.w.size()));
                binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(L.b.size()));
                binio::put_array(out, L.b.data(), static_cast<std::size_t>(L.b.size()));
            } else {
                binio::put<std::uint32_t>(out, 0);
            }
        }
    });
}

SavedNet SavedNet::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open classifier weights: " + path);
    binio::check_header(in, kNetMagic, kFormatVersion, "classifier weights");
    SavedNet net;
    net.in_channels = static_cast<int>(binio::get<std::uint32_t>(in, "in_channels"));
    const auto n = binio::get<std::uint32_t>(in, "layer count");
    net.layers.resize(n);
    for (auto& L : net.layers) {
        const auto kind = binio::get<std::uint32_t>(in, "layer kind");
        if (kind > static_cast<std::uint32_t>(SavedNetLayer::Kind::Fc))
            throw DataError("classifier weights: unknown layer kind " + std::to_string(kind));
        L.kind = static_cast<SavedNetLayer::Kind>(kind);
        L.kernel = binio::get<std::int32_t>(in, "kernel");
        L.stride = binio::get<std::int32_t>(in, "stride");
        L.same_pad = binio::get<std::int32_t>(in, "padding");
        const auto rows = binio::get<std::uint32_t>(in, "weight rows");
        const auto cols = binio::get<std::uint32_t>(in, "weight cols");
        if (rows && cols) {
            L.w = TensorF({static_cast<int>(rows), static_cast<int>(cols)});
            binio::get_array(in, L.w.data(), static_cast<std::size_t>(L.w.size()), "weights");
        }
        const auto blen = binio::get<std::uint32_t>(in, "bias length");
        if (blen) {
            L.b = TensorF({static_cast<int>(blen)});
            binio::get_array(in, L.b.data(), static_cast<std::size_t>(L.b.size()), "bias");
        }
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("classifier weights: trailing bytes after last layer");
    return net;
}

// ---------------------------------------------------------------------------
// PretrainedLogitsProvider
// ---------------------------------------------------------------------------

PretrainedLogitsProvider::PretrainedLogitsProvider(const std::string& weights_path,
                                                   int embed_dim)
    : embed_dim_(embed_dim), net_(SavedNet::load(weights_path)) {
    if (net_.layers.empty() || net_.layers.back().kind != SavedNetLayer::Kind::Fc)
        throw DataError("classifier weights: network must end in a fully connected layer");
    const int out = net_.layers.back().w.dim(0);
    if (out != embed_dim_)
        throw DataError("classifier weights: logits width " + std::to_string(out) +
                        " does not match the configured embedding width " +
                        std::to_string(embed_dim_));
}

TensorF PretrainedLogitsProvider::embed(const TensorF& x) const {
    check_image(x);
    return net_.forward(x);
}

// ---------------------------------------------------------------------------
// Stats and normalization
// ---------------------------------------------------------------------------

EmbeddingStats fit_stats(const EmbeddingProvider& provider, int count,
                         const std::function<TensorF(int)>& loader) {
    if (count < 1) throw DataError("embedding stats: empty dataset");
    const int dim = provider.dim();
    EmbeddingStats stats;
    stats.mean.assign(static_cast<std::size_t>(dim), 0.0);
    stats.count = count;
    for (int i = 0; i < count; ++i) {
        const TensorF e = provider.embed(loader(i));
        if (e.size() != dim) throw ShapeError("embedding stats: provider width changed");
        for (int j = 0; j < dim; ++j) stats.mean[static_cast<std::size_t>(j)] += e[j];
    }
    for (double& v : stats.mean) {
        v /= count;
        if (!std::isfinite(v)) throw NumericError("embedding stats: non-finite mean");
    }
    return stats;
}

TensorF normalize(const TensorF& raw, const EmbeddingStats& stats) {
    TensorF out;
    if (!normalize_or_zero(raw, stats, out))
        return out;
    throw NumericError("embedding: degenerate (zero residual) embedding");
}

bool normalize_or_zero(const TensorF& raw, const EmbeddingStats& stats, TensorF& out) {
    const int dim = static_cast<int>(stats.mean.size());
    if (raw.size() != dim) throw ShapeError("embedding: width does not match the stats");
    std::vector<double> resid(static_cast<std::size_t>(dim));
    double sq = 0.0;
    for (int i = 0; i < dim; ++i) {
        resid[static_cast<std::size_t>(i)] = raw[i] - stats.mean[static_cast<std::size_t>(i)];
        sq += resid[static_cast<std::size_t>(i)] * resid[static_cast<std::size_t>(i)];
    }
    out = TensorF({dim});
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) return true;  // degenerate: leave the zero vector
    for (int i = 0; i < dim; ++i)
        out[i] = static_cast<float>(resid[static_cast<std::size_t>(i)] / norm);
    return false;
}

void EmbeddingStats::save(const std::string& path) const {
    binio::atomic_write(path, [&](std::ostream& out) {
        binio::put_header(out, kStatsMagic, kFormatVersion);
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(mean.size()));
        binio::put<std::int64_t>(out, count);
        binio::put_array(out, mean.data(), mean.size());
    });
}

EmbeddingStats EmbeddingStats::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embedding stats: " + path);
    binio::check_header(in, kStatsMagic, kFormatVersion, "embedding stats");
    EmbeddingStats stats;
    const auto dim = binio::get<std::uint32_t>(in, "stats width");
    stats.count = binio::get<std::int64_t>(in, "stats count");
    if (stats.count < 1) throw DataError("embedding stats: invalid count");
    stats.mean.resize(dim);
    binio::get_array(in, stats.mean.data(), stats.mean.size(), "stats mean");
    return stats;
}

// ---------------------------------------------------------------------------
// EmbeddingCache
// ---------------------------------------------------------------------------

void EmbeddingCache::insert(const std::string& id, TensorF vec) {
    if (dim_ < 0) dim_ = static_cast<int>(vec.size());
    if (vec.size() != dim_) throw ShapeError("embedding cache: vector width mismatch");
    if (entries_.count(id)) throw DataError("embedding cache: id collision: " + id);
    order_.push_back(id);
    entries_.emplace(id, std::move(vec));
}

const TensorF& EmbeddingCache::lookup(const std::string& id) const {
    const auto it = entries_.find(id);
    if (it == entries_.end()) throw DataError("embedding cache: miss for id: " + id);
    return it->second;
}

bool EmbeddingCache::contains(const std::string& id) const { return entries_.count(id) > 0; }

void EmbeddingCache::save(const std::string& path) const {
    binio::atomic_write(path, [&](std::ostream& out) {
        binio::put_header(out, kCacheMagic, kFormatVersion);
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(dim_ < 0 ? 0 : dim_));
        binio::put<std::uint64_t>(out, order_.size());
        for (const auto& id : order_) {
            const TensorF& v = entries_.at(id);
            binio::put_string(out, id);
            binio::put_array(out, v.data(), static_cast<std::size_t>(v.size()));
        }
    });
}

EmbeddingCache EmbeddingCache::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open embedding cache: " + path);
    binio::check_header(in, kCacheMagic, kFormatVersion, "embedding cache");
    EmbeddingCache cache;
    const auto dim = binio::get<std::uint32_t>(in, "cache width");
    const auto n = binio::get<std::uint64_t>(in, "cache count");
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::string id = binio::get_string(in, "cache id");
        TensorF v({static_cast<int>(dim)});
        binio::get_array(in, v.data(), static_cast<std::size_t>(v.size()), "cache vector");
        cache.insert(id, std::move(v));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("embedding cache: trailing bytes after last record");
    return cache;
}

int precompute_cache(const EmbeddingProvider& provider, const EmbeddingStats& stats,
                     const std::vector<std::string>& ids,
                     const std::function<TensorF(int)>& loader, EmbeddingCache& cache) {
    int degenerate = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const TensorF raw = provider.embed(loader(static_cast<int>(i)));
        TensorF vec;
        if (normalize_or_zero(raw, stats, vec)) ++degenerate;
        cache.insert(ids[i], std::move(vec));
    }
    return degenerate;
}

}  // namespace outpaint::conditioning
