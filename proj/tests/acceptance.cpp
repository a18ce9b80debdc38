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
//
// Acceptance gate. Each check prints one [PASS]/[FAIL] line; the binary
// exits nonzero if any check fails. The checks are property-based plus a
// desk-scale training-trend run; full-dataset quality numbers are out of
// scope for a workstation and are documented in the README instead.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "outpaint/conditioning.hpp"
#include "outpaint/core/errors.hpp"
#include "outpaint/core/rng.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/datapipe.hpp"
#include "outpaint/evaluation.hpp"
#include "outpaint/kernels/kernels.hpp"
#include "outpaint/losses.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/nn/discriminator.hpp"
#include "outpaint/nn/generator.hpp"
#include "outpaint/nn/spectral_norm.hpp"
#include "outpaint/panorama.hpp"
#include "outpaint/trainer.hpp"

namespace fs = std::filesystem;
using namespace outpaint;
using Clock = std::chrono::steady_clock;

namespace {

struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& msg) {
    if (!ok) throw Failure(msg);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool g_all_ok = true;

void run_check(const std::string& name, const std::function<void()>& body) {
    const auto t0 = Clock::now();
    try {
        body();
        const double s = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("[PASS] %s (%.1fs)\n", name.c_str(), s);
    } catch (const std::exception& e) {
        g_all_ok = false;
        std::printf("[FAIL] %s: %s\n", name.c_str(), e.what());
    }
    std::fflush(stdout);
}

TensorF random_image_f(Rng& rng, int c, int h, int w) {
    TensorF x({c, h, w});
    for (std::int64_t i = 0; i < x.size(); ++i)
        x[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
    return x;
}

TensorD random_image_d(Rng& rng, int c, int h, int w) {
    TensorD x({c, h, w});
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(-0.9, 0.9);
    return x;
}

nn::DiscriminatorConfig tiny_disc_config() {
    nn::DiscriminatorConfig cfg;
    cfg.input_size = 8;
    cfg.width_multiplier = 1.0 / 16.0;
    cfg.embed_dim = 16;
    return cfg;
}

// Closed-form Fréchet distance between Gaussians via the general matrix
// formula, evaluated on the diagonal covariances as full matrices.
double frechet_full(const evaluation::GaussianStats& a,
                    const evaluation::GaussianStats& b) {
    const int d = static_cast<int>(a.mean.size());
    Eigen::VectorXd mu1(d), mu2(d), v1(d), v2(d);
    for (int i = 0; i < d; ++i) {
        mu1(i) = a.mean[static_cast<std::size_t>(i)];
        mu2(i) = b.mean[static_cast<std::size_t>(i)];
        v1(i) = a.var[static_cast<std::size_t>(i)];
        v2(i) = b.var[static_cast<std::size_t>(i)];
    }
    const Eigen::MatrixXd c1 = v1.asDiagonal();
    const Eigen::MatrixXd c2 = v2.asDiagonal();
    const Eigen::MatrixXd prod = c1 * c2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(prod);
    const Eigen::MatrixXd sqrt_prod = es.operatorSqrt();
    return (mu1 - mu2).squaredNorm() + (c1 + c2 - 2.0 * sqrt_prod).trace();
}

std::vector<train::TrainExample> synth_examples(int count, int size,
                                                std::uint64_t seed) {
    std::vector<train::TrainExample> out;
    out.reserve(static_cast<std::size_t>(count));
    Rng seeds(seed);
    const data::TextureKind kinds[3] = {data::TextureKind::Gradient,
                                        data::TextureKind::Stripes,
                                        data::TextureKind::Blobs};
    for (int i = 0; i < count; ++i) {
        const data::Image8 img =
            data::synth_texture(kinds[i % 3], size, size, seeds.next_u64());
        char id[32];
        std::snprintf(id, sizeof id, "t/%04d", i);
        out.push_back({id, data::to_tensor(img)});
    }
    return out;
}

conditioning::EmbeddingCache build_cache(
    const conditioning::EmbeddingProvider& provider,
    const std::vector<train::TrainExample>& ds) {
    const auto loader = [&](int i) {
        return ds[static_cast<std::size_t>(i)].image;
    };
    const auto stats =
        conditioning::fit_stats(provider, static_cast<int>(ds.size()), loader);
    std::vector<std::string> ids;
    ids.reserve(ds.size());
    for (const auto& ex : ds) ids.push_back(ex.id);
    conditioning::EmbeddingCache cache;
    conditioning::precompute_cache(provider, stats, ids, loader, cache);
    return cache;
}

std::vector<float> snapshot_params(train::Trainer& t) {
    std::vector<float> out;
    for (const auto& p : t.generator().params())
        out.insert(out.end(), p.value->data(), p.value->data() + p.value->size());
    for (const auto& p : t.discriminator().params())
        out.insert(out.end(), p.value->data(), p.value->data() + p.value->size());
    return out;
}

std::vector<std::string> metric_records(const std::string& log) {
    std::vector<std::string> out;
    std::istringstream in(log);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') out.push_back(line);
    return out;
}

// ---------------------------------------------------------------------------
// Exact arithmetic on the hand-checkable identities.
// ---------------------------------------------------------------------------
void check_exact_arithmetic() {
    Rng rng(101);

    // Masking and compositing identities.
    {
        const TensorF x = random_image_f(rng, 3, 8, 8);
        masking::Mask zeros({8, 8});
        zeros.fill(0.0f);
        masking::Mask ones({8, 8});
        ones.fill(1.0f);
        const masking::Mask half = masking::right_strip_mask(8, 8, 4);

        const TensorF z0 = masking::apply_mask(x, zeros);
        for (std::int64_t i = 0; i < x.size(); ++i)
            require(z0[i] == x[i], "apply_mask with an empty mask must be the identity");
        const TensorF z1 = masking::apply_mask(x, ones);
        for (std::int64_t i = 0; i < z1.size(); ++i)
            require(z1[i] == 0.0f, "apply_mask with a full mask must zero everything");

        TensorF onesimg({3, 8, 8});
        onesimg.fill(1.0f);
        const TensorF zh = masking::apply_mask(onesimg, half);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 8; ++y)
                for (int xx = 0; xx < 8; ++xx)
                    require(zh.at(c, y, xx) == (xx < 4 ? 1.0f : 0.0f),
                            "half mask must zero exactly the right half");

        const TensorF g = random_image_f(rng, 3, 8, 8);
        const TensorF c0 = masking::composite(g, x, zeros);
        for (std::int64_t i = 0; i < x.size(); ++i)
            require(c0[i] == x[i], "composite with an empty mask must return z");
        const TensorF c1 = masking::composite(g, x, ones);
        for (std::int64_t i = 0; i < g.size(); ++i)
            require(c1[i] == g[i], "composite with a full mask must return g");

        TensorF ghalf({3, 8, 8});
        ghalf.fill(0.5f);
        TensorF xhalf({3, 8, 8});
        xhalf.fill(-0.5f);
        const TensorF zz = masking::apply_mask(xhalf, half);
        const TensorF ch = masking::composite(ghalf, zz, half);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 8; ++y)
                for (int xx = 0; xx < 8; ++xx)
                    require(ch.at(c, y, xx) == (xx < 4 ? -0.5f : 0.5f),
                            "composite half/half values are off");
    }

    // Hinge losses at the margins.
    require(losses::hinge_d_loss(1.0, -1.0) == 0.0, "hinge_d(1,-1) != 0");
    require(losses::hinge_d_loss(0.0, 0.0) == 2.0, "hinge_d(0,0) != 2");
    require(losses::hinge_d_loss(-1.0, 1.0) == 4.0, "hinge_d(-1,1) != 4");
    require(losses::hinge_g_loss(3.0) == -3.0, "hinge_g(3) != -3");
    require(losses::hinge_g_loss(0.0) == 0.0, "hinge_g(0) != 0");
    require(losses::hinge_g_loss(std::vector<double>{1.0, -1.0}) == 0.0,
            "hinge_g mean of {1,-1} != 0");

    // Weighted generator total.
    {
        losses::LossWeights w;
        require(std::abs(losses::total_g_loss(0.5, 2.0, w) - 0.52) < 1e-12,
                "total for l_rec=0.5, l_adv=2 must be 0.52");
        losses::LossWeights w0 = w;
        w0.lambda_adv = 0.0;
        require(losses::total_g_loss(0.5, 2.0, w0) == 0.5,
                "lambda=0 must return l_rec alone");
        require(losses::total_g_loss(0.5, 0.0, w) == 0.5,
                "l_adv=0 must return l_rec alone");
    }

    // FID on identical stats and on a pure unit mean shift.
    {
        evaluation::GaussianStats a;
        a.mean = {1.0, 2.0};
        a.var = {0.5, 3.0};
        a.n = 5;
        require(evaluation::fid_diagonal(a, a) == 0.0, "fid(a,a) != 0");
        evaluation::GaussianStats b = a;
        b.mean[0] += 1.0;
        require(evaluation::fid_diagonal(a, b) == 1.0,
                "unit mean shift with equal variances must give exactly 1");
    }

    // PSNR: cap, half-peak error, and zero dB.
    {
        const masking::Mask m = masking::right_strip_mask(4, 4, 2);
        TensorF x({3, 4, 4});
        for (std::int64_t i = 0; i < x.size(); ++i)
            x[i] = static_cast<float>(rng.uniform_int(0, 15)) / 16.0f;
        TensorF exact = x;
        exact.at(0, 0, 0) += 0.25f;  // corrupt a known pixel only
        require(evaluation::psnr_masked(x, exact, m) == evaluation::kPsnrCapDb,
                "exact match on the mask must hit the cap");

        TensorF off = x;
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 4; ++y)
                for (int xx = 2; xx < 4; ++xx) off.at(c, y, xx) -= 1.0f;
        const double got = evaluation::psnr_masked(x, off, m);
        require(std::abs(got - 10.0 * std::log10(4.0)) < 1e-9,
                "constant 0.5 error must give 10*log10(4) dB, got " + fmt(got));

        TensorF lo({3, 4, 4}), hi({3, 4, 4});
        lo.fill(-1.0f);
        hi.fill(1.0f);
        require(evaluation::psnr_masked(lo, hi, m) == 0.0,
                "full-scale error must give exactly 0 dB");
    }

    // Panorama width law: seed 192, six pads of 65 -> 582; and an actual
    // tiny synthesis, where growth and prefix preservation are checked live.
    {
        panorama::PanoramaConfig def;
        require(def.seed_width + def.steps * def.pad_width == 582,
                "default panorama must end at 582 columns");

        panorama::PanoramaConfig tiny;
        tiny.seed_width = 12;
        tiny.pad_width = 4;
        tiny.window_height = 16;
        tiny.steps = 3;
        nn::GeneratorConfig gc;
        gc.width_multiplier = 1.0 / 16.0;
        nn::Generator<float> g(gc, 77);
        const TensorF seed = random_image_f(rng, 3, 16, 12);
        const TensorF pano = panorama::generate_panorama(g, seed, tiny);
        require(pano.dim(2) == 12 + 3 * 4, "tiny panorama width law broken");
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 16; ++y)
                for (int xx = 0; xx < 12; ++xx)
                    require(pano.at(c, y, xx) == seed.at(c, y, xx),
                            "panorama must keep the seed bitwise");
    }
}

// ---------------------------------------------------------------------------
// The critic score is affine in the conditioning vector.
// ---------------------------------------------------------------------------
void check_projection_affinity() {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(2000 + static_cast<std::uint64_t>(trial));
        nn::Discriminator<double> d(tiny_disc_config(),
                                    3000 + static_cast<std::uint64_t>(trial));
        const TensorD x = random_image_d(rng, 3, 8, 8);
        const masking::Mask m = masking::right_strip_mask(8, 8, 3);
        TensorD zero({16});
        zero.fill(0.0);
        TensorD c1({16}), c2({16});
        for (int i = 0; i < 16; ++i) {
            c1[i] = rng.uniform(-1.5, 1.5);
            c2[i] = rng.uniform(-1.5, 1.5);
        }
        const double alpha = rng.uniform(-2.0, 2.0);
        const double beta = rng.uniform(-2.0, 2.0);
        TensorD mix({16});
        for (int i = 0; i < 16; ++i) mix[i] = alpha * c1[i] + beta * c2[i];

        const double s0 = d.score(x, m, &zero, false);
        const double s1 = d.score(x, m, &c1, false);
        const double s2 = d.score(x, m, &c2, false);
        const double sm = d.score(x, m, &mix, false);
        const double lhs = sm - s0;
        const double rhs = alpha * (s1 - s0) + beta * (s2 - s0);
        const double rel =
            std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-6});
        worst = std::max(worst, rel);
    }
    require(worst < 1e-5,
            "three-point affinity relative error " + fmt(worst) + " >= 1e-5");
}

// ---------------------------------------------------------------------------
// Power-iteration normalization lands within 1% of the SVD top value.
// ---------------------------------------------------------------------------
void check_spectral_normalization() {
    Rng rng(404);
    for (int layer = 0; layer < 20; ++layer) {
        const int rows = static_cast<int>(rng.uniform_int(1, 40));
        const int cols = static_cast<int>(rng.uniform_int(1, 40));
        const double scale = std::pow(10.0, rng.uniform(-2.0, 1.0));
        TensorD w({rows, cols});
        for (std::int64_t i = 0; i < w.size(); ++i)
            w[i] = scale * rng.uniform(-1.0, 1.0);

        nn::SpectralNorm<double> sn;
        sn.init(rows, cols, rng);
        for (int it = 0; it < 50; ++it) sn.advance(w);
        TensorD wbar({rows, cols});
        sn.normalize_into(w, wbar);

        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>
            mat(wbar.data(), rows, cols);
        const double top = mat.jacobiSvd().singularValues()(0);
        require(top >= 0.99 && top <= 1.01,
                "normalized top singular value " + fmt(top) + " outside [0.99, 1.01]");
    }
}

// ---------------------------------------------------------------------------
// Analytic gradients of the full objectives against central differences.
// ---------------------------------------------------------------------------
void check_gradients() {
    nn::GeneratorConfig gcfg;
    gcfg.width_multiplier = 1.0 / 16.0;
    nn::Generator<double> g(gcfg, 21);
    nn::Discriminator<double> d(tiny_disc_config(), 22);
    d.advance_spectral_norm();

    Rng rng(23);
    const TensorD x = random_image_d(rng, 3, 8, 8);
    const masking::Mask m = masking::right_strip_mask(8, 8, 2);
    const TensorD z = masking::apply_mask(x, m);
    TensorD c({16});
    for (int i = 0; i < 16; ++i) c[i] = rng.uniform(-1.0, 1.0);
    const double lambda = losses::LossWeights{}.lambda_adv;
    const double h = 1e-5;
    const std::int64_t hw = 64;

    // Generator total: reconstruction plus the weighted adversarial score of
    // the composite, with the critic frozen.
    const auto g_loss = [&]() {
        const TensorD y = g.forward(z, m, false);
        const TensorD comp = masking::composite(y, z, m);
        const double s = d.score(comp, m, &c, false);
        return losses::recon_loss(x, y) + lambda * -s;
    };
    g.zero_grads();
    {
        const TensorD y = g.forward(z, m, true);
        const TensorD comp = masking::composite(y, z, m);
        (void)d.score(comp, m, &c, true);
        TensorD dg = losses::recon_loss_backward(x, y, 1.0);
        const TensorD di = d.backward(-lambda, true, false);
        for (int ch = 0; ch < 3; ++ch)
            for (std::int64_t p = 0; p < hw; ++p)
                if (m[p] != 0.0f) dg[ch * hw + p] += di[ch * hw + p];
        g.backward(dg);
    }
    double max_err = 0.0;
    int checked = 0;
    Rng pick(24);
    for (const auto& p : g.params()) {
        const std::int64_t n = p.value->size();
        const std::int64_t samples = std::min<std::int64_t>(n, 10);
        for (std::int64_t sidx = 0; sidx < samples; ++sidx) {
            const std::int64_t i =
                (samples == n) ? sidx : pick.uniform_int(0, n - 1);
            double* slot = &(*p.value)[i];
            const double orig = *slot;
            *slot = orig + h;
            const double fp = g_loss();
            *slot = orig - h;
            const double fm = g_loss();
            *slot = orig;
            const double fd = (fp - fm) / (2 * h);
            const double an = (*p.grad)[i];
            const double err =
                std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
            max_err = std::max(max_err, err);
            ++checked;
        }
    }
    require(checked >= 300, "generator gradient check sampled too few parameters");
    require(max_err < 1e-4,
            "generator total-loss gradient error " + fmt(max_err) + " >= 1e-4");

    // Critic hinge: both scores against a fixed real image and a fixed,
    // detached composite.
    const TensorD comp0 = [&]() {
        const TensorD y = g.forward(z, m, false);
        return masking::composite(y, z, m);
    }();
    const auto d_loss = [&]() {
        const double sr = d.score(x, m, &c, false);
        const double sf = d.score(comp0, m, &c, false);
        return losses::hinge_d_loss(sr, sf);
    };
    d.zero_grads();
    {
        const double sr = d.score(x, m, &c, true);
        require(1.0 - sr > 1e-2 && 1.0 + d.score(comp0, m, &c, false) > 1e-2,
                "hinge margins must be active and away from the kinks");
        (void)d.score(x, m, &c, true);
        d.backward(1.0 - sr > 0 ? -1.0 : 0.0, false, true);
        const double sf = d.score(comp0, m, &c, true);
        d.backward(1.0 + sf > 0 ? 1.0 : 0.0, false, true);
    }
    double max_err_d = 0.0;
    int checked_d = 0;
    for (const auto& p : d.params()) {
        const std::int64_t n = p.value->size();
        const std::int64_t samples = std::min<std::int64_t>(n, 10);
        for (std::int64_t sidx = 0; sidx < samples; ++sidx) {
            const std::int64_t i =
                (samples == n) ? sidx : pick.uniform_int(0, n - 1);
            double* slot = &(*p.value)[i];
            const double orig = *slot;
            *slot = orig + h;
            const double fp = d_loss();
            *slot = orig - h;
            const double fm = d_loss();
            *slot = orig;
            const double fd = (fp - fm) / (2 * h);
            const double an = (*p.grad)[i];
            const double err =
                std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-3});
            max_err_d = std::max(max_err_d, err);
            ++checked_d;
        }
    }
    require(checked_d >= 100, "critic gradient check sampled too few parameters");
    require(max_err_d < 1e-4,
            "critic hinge gradient error " + fmt(max_err_d) + " >= 1e-4");
}

// ---------------------------------------------------------------------------
// Full-scale shape walk: generator waypoints and the critic tower.
// ---------------------------------------------------------------------------
void check_shape_parity() {
    const nn::GeneratorConfig gcfg;
    const auto tr = nn::generator_trace(gcfg, 257, 257);
    std::vector<int> waypoints{257};
    for (const auto& e : tr)
        if (e.h != waypoints.back()) waypoints.push_back(e.h);
    const std::vector<int> want{257, 129, 65, 129, 257};
    require(waypoints == want, "generator spatial waypoints are wrong");
    for (std::size_t i = 1; i < tr.size(); ++i)
        if (tr[i].h > tr[i - 1].h)
            require(tr[i].kind == nn::GenLayerKind::Resize,
                    "spatial growth must come from resize stages");
    require(tr.back().out_ch == 3, "generator must end in RGB");

    const nn::DiscriminatorConfig dcfg;
    const auto dt = nn::discriminator_trace(dcfg, 257, 257);
    require(dt.size() == 7, "critic tower must have seven stages");
    const int want_h[7] = {129, 65, 33, 17, 9, 5, 1};
    for (int i = 0; i < 7; ++i)
        require(dt[static_cast<std::size_t>(i)].h == want_h[i] &&
                    dt[static_cast<std::size_t>(i)].w == want_h[i],
                "critic stage " + std::to_string(i + 1) + " spatial size is wrong");
    require(dt.back().ch == 256, "critic feature width must be 256");
    require(nn::discriminator_proj_dim(dcfg) == 256,
            "projection width must match the feature width");
}

// ---------------------------------------------------------------------------
// Diagonal distance equals the closed-form matrix formula.
// ---------------------------------------------------------------------------
void check_fid_oracle() {
    Rng rng(606);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = static_cast<int>(rng.uniform_int(1, 16));
        evaluation::GaussianStats a, b;
        a.n = b.n = 8;
        for (int i = 0; i < d; ++i) {
            a.mean.push_back(rng.uniform(-3.0, 3.0));
            b.mean.push_back(rng.uniform(-3.0, 3.0));
            a.var.push_back(rng.uniform(0.05, 4.0));
            b.var.push_back(rng.uniform(0.05, 4.0));
        }
        const double got = evaluation::fid_diagonal(a, b);
        const double want = frechet_full(a, b);
        worst = std::max(worst, std::abs(got - want));
    }
    require(worst <= 1e-8,
            "diagonal distance deviates from the closed form by " + fmt(worst));
}

// ---------------------------------------------------------------------------
// Ablations change parameter sets exactly as the layer table predicts,
// observed on checkpoints that never saw a training step.
// ---------------------------------------------------------------------------
void check_ablation_observability(const fs::path& tmp) {
    nn::GeneratorConfig gc;
    gc.width_multiplier = 0.25;
    nn::DiscriminatorConfig dc;
    dc.width_multiplier = 0.25;
    dc.input_size = 65;
    train::TrainingConfig tc;
    tc.steps = 0;
    tc.batch_size = 1;
    tc.seed = 99;
    const losses::LossWeights w;

    const auto count_params = [](std::vector<nn::ParamEntry<float>> ps) {
        std::int64_t n = 0;
        for (const auto& p : ps) n += p.value->size();
        return n;
    };
    const auto has_projection = [](std::vector<nn::ParamEntry<float>> ps) {
        for (const auto& p : ps)
            if (p.name == "d.fc.w") return true;
        return false;
    };

    // Conditioning ablation: exactly the projection matrix disappears.
    train::Trainer base(gc, dc, tc, w);
    base.save_checkpoint((tmp / "base.ckpt").string());
    train::TrainingConfig tc_nc = tc;
    tc_nc.no_cond = true;
    train::Trainer nocond(gc, dc, tc_nc, w);
    nocond.save_checkpoint((tmp / "nocond.ckpt").string());

    train::Trainer lb = train::Trainer::load_checkpoint((tmp / "base.ckpt").string());
    train::Trainer ln =
        train::Trainer::load_checkpoint((tmp / "nocond.ckpt").string());
    require(has_projection(lb.discriminator().params()),
            "baseline checkpoint lost its projection parameters");
    require(!has_projection(ln.discriminator().params()),
            "ablated checkpoint still carries projection parameters");
    const std::int64_t cond_delta = count_params(lb.discriminator().params()) -
                                    count_params(ln.discriminator().params());
    const std::int64_t cond_want =
        static_cast<std::int64_t>(dc.embed_dim) * nn::discriminator_proj_dim(dc);
    require(cond_delta == cond_want,
            "conditioning ablation removed " + std::to_string(cond_delta) +
                " parameters, expected " + std::to_string(cond_want));

    // Skip ablation: the narrowing of each concatenated input predicts the
    // exact parameter loss.
    nn::GeneratorConfig gc_ns = gc;
    gc_ns.use_skips = false;
    const auto tw = nn::generator_trace(gc, 65, 65);
    const auto tn = nn::generator_trace(gc_ns, 65, 65);
    const auto& table = nn::default_generator_table();
    require(tw.size() == table.size() && tn.size() == table.size(),
            "trace length must match the layer table");
    std::int64_t skip_want = 0;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const std::int64_t din = tw[i].in_ch - tn[i].in_ch;
        const std::int64_t k2 =
            static_cast<std::int64_t>(table[i].kernel) * table[i].kernel;
        if (table[i].kind == nn::GenLayerKind::GatedConv)
            skip_want += din * 2 * tw[i].own_ch * k2;
        else if (table[i].kind == nn::GenLayerKind::PlainConv)
            skip_want += din * tw[i].own_ch * k2;
    }
    require(skip_want > 0, "the layer table predicts no skip parameters at all");
    require(nn::generator_param_count(gc) - nn::generator_param_count(gc_ns) ==
                skip_want,
            "config-level parameter counts disagree with the table prediction");

    train::TrainingConfig tc_ns = tc;
    tc_ns.no_skip = true;
    train::Trainer noskip(gc, dc, tc_ns, w);
    noskip.save_checkpoint((tmp / "noskip.ckpt").string());
    train::Trainer ls =
        train::Trainer::load_checkpoint((tmp / "noskip.ckpt").string());
    const std::int64_t skip_delta =
        count_params(lb.generator().params()) - count_params(ls.generator().params());
    require(skip_delta == skip_want,
            "skip ablation removed " + std::to_string(skip_delta) +
                " parameters, expected " + std::to_string(skip_want));
}

// ---------------------------------------------------------------------------
// Seeded runs agree bitwise, and a mid-run save/load continues the exact
// stream for ten further steps.
// ---------------------------------------------------------------------------
void check_determinism(const fs::path& tmp) {
    const auto ds = synth_examples(6, 16, 31);
    const conditioning::StubProvider provider(16, 32);
    const auto cache = build_cache(provider, ds);

    nn::GeneratorConfig gc;
    gc.width_multiplier = 1.0 / 16.0;
    nn::DiscriminatorConfig dc;
    dc.width_multiplier = 1.0 / 16.0;
    dc.input_size = 16;
    dc.embed_dim = 16;
    train::TrainingConfig tc;
    tc.batch_size = 2;
    tc.steps = 15;
    tc.seed = 33;
    tc.mask_spec.fraction = 0.25;
    tc.mask_spec.jitter_px = 2;
    const losses::LossWeights w;

    std::ostringstream log_a, log_b;
    train::Trainer ta(gc, dc, tc, w);
    ta.train(ds, &cache, &log_a, "");
    train::Trainer tb(gc, dc, tc, w);
    tb.train(ds, &cache, &log_b, "");
    require(log_a.str() == log_b.str(),
            "two identically seeded runs produced different metrics");
    require(snapshot_params(ta) == snapshot_params(tb),
            "two identically seeded runs produced different parameters");

    train::TrainingConfig tc5 = tc;
    tc5.steps = 5;
    std::ostringstream log_half, log_resumed;
    train::Trainer th(gc, dc, tc5, w);
    th.train(ds, &cache, &log_half, tmp.string());
    train::Trainer tr =
        train::Trainer::load_checkpoint((tmp / "final.ckpt").string());
    tr.set_total_steps(15);
    tr.train(ds, &cache, &log_resumed, "");

    const auto full = metric_records(log_a.str());
    const auto resumed = metric_records(log_resumed.str());
    require(full.size() == 15, "straight run must log fifteen records");
    require(resumed.size() == 10, "resumed run must log ten further records");
    for (std::size_t i = 0; i < resumed.size(); ++i)
        require(resumed[i] == full[i + 5],
                "resumed step " + std::to_string(i + 6) +
                    " diverged from the straight run");
    require(snapshot_params(tr) == snapshot_params(ta),
            "resumed parameters diverged from the straight run");
}

// ---------------------------------------------------------------------------
// Desk-scale trend: a real training run must lift masked PSNR by 5 dB and
// halve the stub-feature distance, with every logged value finite.
// ---------------------------------------------------------------------------
void check_training_trend() {
    const auto t0 = Clock::now();
    const auto ds = synth_examples(64, 65, 71);
    const conditioning::StubProvider provider(1000, 72);
    const auto cache = build_cache(provider, ds);

    nn::GeneratorConfig gc;
    gc.width_multiplier = 0.25;
    nn::DiscriminatorConfig dc;
    dc.width_multiplier = 0.25;
    dc.input_size = 65;
    train::TrainingConfig tc;
    tc.batch_size = 8;
    tc.steps = 2000;
    tc.seed = 73;
    tc.mask_spec.fraction = 0.25;
    tc.mask_spec.jitter_px = 0;
    const losses::LossWeights w;

    train::Trainer trainer(gc, dc, tc, w);
    const auto before =
        evaluation::evaluate_model(trainer.generator(), ds, tc.mask_spec, provider);

    std::ostringstream log;
    trainer.train(ds, &cache, &log, "");

    const auto after =
        evaluation::evaluate_model(trainer.generator(), ds, tc.mask_spec, provider);
    const double minutes =
        std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
    std::printf(
        "       trend: psnr %.2f -> %.2f dB, feature distance %.4g -> %.4g, "
        "%.1f min\n",
        before.mean_masked_psnr, after.mean_masked_psnr, before.fid, after.fid,
        minutes);

    for (const auto& rec : metric_records(log.str())) {
        std::istringstream in(rec);
        std::string tok;
        while (in >> tok) {
            const auto eq = tok.find('=');
            require(eq != std::string::npos, "malformed metrics token " + tok);
            const double v = std::stod(tok.substr(eq + 1));
            require(std::isfinite(v), "non-finite logged value in: " + rec);
        }
    }
    require(after.mean_masked_psnr >= before.mean_masked_psnr + 5.0,
            "masked PSNR improved only " +
                fmt(after.mean_masked_psnr - before.mean_masked_psnr) + " dB");
    require(after.fid <= 0.5 * before.fid,
            "feature distance fell only to " + fmt(after.fid) + " from " +
                fmt(before.fid));
    require(minutes <= 30.0, "trend run took " + fmt(minutes) + " minutes");
}

}  // namespace

int main() {
    const fs::path tmp =
        fs::temp_directory_path() /
        ("outpaint_acceptance_" + std::to_string(static_cast<long long>(
                                      Clock::now().time_since_epoch().count())));
    fs::create_directories(tmp);

    const auto t0 = Clock::now();
    run_check("exact-arithmetic identities", check_exact_arithmetic);
    run_check("projection affinity in the conditioning vector",
              check_projection_affinity);
    run_check("spectral normalization against an SVD oracle",
              check_spectral_normalization);
    run_check("finite-difference gradient check", check_gradients);
    run_check("shape parity at full scale", check_shape_parity);
    run_check("diagonal feature distance against the closed-form oracle",
              check_fid_oracle);
    run_check("ablation observability from checkpoints",
              [&] { check_ablation_observability(tmp); });
    run_check("determinism and checkpoint round-trip",
              [&] { check_determinism(tmp); });
    run_check("desk-scale training trend", check_training_trend);

    std::error_code ec;
    fs::remove_all(tmp, ec);
    const double total = std::chrono::duration<double>(Clock::now() - t0).count();
    std::printf("%s in %.1fs\n", g_all_ok ? "all checks passed" : "CHECKS FAILED",
                total);
    return g_all_ok ? 0 : 1;
}
