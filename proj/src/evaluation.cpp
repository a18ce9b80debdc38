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

#include "outpaint/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "outpaint/core/errors.hpp"

namespace outpaint::evaluation {

GaussianStats fit_gaussian(const std::vector<TensorF>& features) {
    if (features.size() < 2)
        throw DataError("fit_gaussian: needs at least two feature rows");
    const std::int64_t d = features.front().size();
    for (const TensorF& f : features)
        if (f.rank() != 1 || f.size() != d)
            throw ShapeError("fit_gaussian: inconsistent feature widths");

    GaussianStats s;
    s.n = static_cast<int>(features.size());
    s.mean.assign(static_cast<std::size_t>(d), 0.0);
    s.var.assign(static_cast<std::size_t>(d), 0.0);
    for (const TensorF& f : features)
        for (std::int64_t i = 0; i < d; ++i)
            s.mean[static_cast<std::size_t>(i)] += f[i];
    for (auto& v : s.mean) v /= s.n;
    // Two-pass variance: centered squares cannot go negative.
    for (const TensorF& f : features)
        for (std::int64_t i = 0; i < d; ++i) {
            const double c = f[i] - s.mean[static_cast<std::size_t>(i)];
            s.var[static_cast<std::size_t>(i)] += c * c;
        }
    for (auto& v : s.var) v /= (s.n - 1);
    return s;
}

double fid_diagonal(const GaussianStats& a, const GaussianStats& b) {
    if (a.mean.size() != b.mean.size())
        throw ShapeError("fid_diagonal: dimension mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.mean.size(); ++i) {
        const double dm = a.mean[i] - b.mean[i];
        const double ds = std::sqrt(a.var[i]) - std::sqrt(b.var[i]);
        acc += dm * dm + ds * ds;
    }
    return acc;
}

double psnr_masked(const TensorF& x, const TensorF& x_hat, const masking::Mask& m) {
    if (!x.same_shape(x_hat)) throw ShapeError("psnr_masked: image shape mismatch");
    if (x.rank() != 3 || m.rank() != 2 || x.dim(1) != m.dim(0) || x.dim(2) != m.dim(1))
        throw ShapeError("psnr_masked: image/mask shape mismatch");
    const std::int64_t hw = static_cast<std::int64_t>(m.dim(0)) * m.dim(1);
    double sq = 0.0;
    std::int64_t count = 0;
    for (int ch = 0; ch < x.dim(0); ++ch) {
        const float* a = x.data() + ch * hw;
        const float* b = x_hat.data() + ch * hw;
        for (std::int64_t i = 0; i < hw; ++i) {
            if (m[i] == 0.0f) continue;
            // [-1, 1] -> [0, 1]; the factor 2 cancels into the difference.
            const double d = (static_cast<double>(b[i]) - a[i]) / 2.0;
            sq += d * d;
            ++count;
        }
    }
    if (count == 0) throw ConfigError("psnr_masked: mask has no unknown pixels");
    const double mse = sq / static_cast<double>(count);
    if (mse == 0.0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(1.0 / mse));
}

EvalReport evaluate_pairs(const std::vector<train::TrainExample>& real_images,
                          const std::vector<TensorF>& outputs,
                          const masking::Mask& m,
                          const conditioning::EmbeddingProvider& provider) {
    if (real_images.empty()) throw DataError("evaluate: empty evaluation set");
    if (real_images.size() != outputs.size())
        throw ShapeError("evaluate: real/output count mismatch");
    if (real_images.size() < 2)
        throw DataError("evaluate: needs at least two images for the feature fit");

    EvalReport r;
    r.count = static_cast<int>(real_images.size());
    std::vector<TensorF> feats_real, feats_out;
    feats_real.reserve(real_images.size());
    feats_out.reserve(outputs.size());
    for (std::size_t i = 0; i < real_images.size(); ++i) {
        const TensorF& x = real_images[i].image;
        const TensorF& xh = outputs[i];
        feats_real.push_back(provider.embed(x));
        feats_out.push_back(provider.embed(xh));
        EvalRecord rec;
        rec.id = real_images[i].id;
        rec.psnr = psnr_masked(x, xh, m);
        r.mean_masked_psnr += rec.psnr;
        r.per_image.push_back(std::move(rec));
    }
    r.mean_masked_psnr /= r.count;
    r.fid = fid_diagonal(fit_gaussian(feats_real), fit_gaussian(feats_out));
    return r;
}

EvalReport evaluate_model(nn::Generator<float>& g,
                          const std::vector<train::TrainExample>& eval_set,
                          masking::MaskSpec mask_spec,
                          const conditioning::EmbeddingProvider& provider) {
    if (eval_set.empty()) throw DataError("evaluate: empty evaluation set");
    const TensorF& first = eval_set.front().image;
    if (first.rank() != 3 || first.dim(0) != 3)
        throw ShapeError("evaluate: images must be (3, H, W)");
    const int h = first.dim(1), w = first.dim(2);
    mask_spec.jitter_px = 0;  // evaluation uses the deterministic base mask
    const masking::Mask m = masking::build_mask(mask_spec, h, w);

    std::vector<TensorF> outputs;
    outputs.reserve(eval_set.size());
    for (const train::TrainExample& ex : eval_set) {
        if (ex.image.rank() != 3 || ex.image.dim(0) != 3 || ex.image.dim(1) != h ||
            ex.image.dim(2) != w)
            throw ShapeError("evaluate: example '" + ex.id + "' has a mismatched shape");
        const TensorF z = masking::apply_mask(ex.image, m);
        TensorF out = g.forward(z, m, /*training=*/false);
        outputs.push_back(masking::composite(out, z, m));
    }
    return evaluate_pairs(eval_set, outputs, m, provider);
}

void write_report(std::ostream& out, const EvalReport& report) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "fid %.17g\n", report.fid);
    out << buf;
    std::snprintf(buf, sizeof buf, "mean_masked_psnr %.17g\n", report.mean_masked_psnr);
    out << buf;
    out << "count " << report.count << '\n';
    for (const EvalRecord& rec : report.per_image) {
        std::snprintf(buf, sizeof buf, " psnr=%.17g\n", rec.psnr);
        out << "image " << rec.id << buf;
    }
}

}  // namespace outpaint::evaluation
