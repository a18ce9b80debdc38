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

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "outpaint/core/rng.hpp"
#include "outpaint/nn/ops.hpp"
#include "outpaint/nn/spectral_norm.hpp"

using namespace outpaint;
using namespace outpaint::nn;

namespace {

TensorD random_tensor(Rng& rng, std::vector<int> dims, double scale = 1.0) {
    TensorD t(std::move(dims));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-scale, scale);
    return t;
}

// Central difference of a scalar functional with respect to one entry.
double fd_central(const std::function<double()>& f, double* x, double h = 1e-5) {
    const double orig = *x;
    *x = orig + h;
    const double fp = f();
    *x = orig - h;
    const double fm = f();
    *x = orig;
    return (fp - fm) / (2.0 * h);
}

// Relative error with a floor so near-zero gradients are judged absolutely.
double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-3});
}

// Direct (quadruple-loop) convolution used as the oracle for conv2d.
TensorD naive_conv(const TensorD& x, const TensorD& w, const TensorD* b,
                   const ConvGeom& g) {
    const int c = x.dim(0), h = x.dim(1), wd = x.dim(2);
    const int oh = conv_out_size(h, g), ow = conv_out_size(wd, g);
    const int out_ch = w.dim(0);
    const int pad_y = g.padding == Padding::Same ? same_pad_begin(h, g) : 0;
    const int pad_x = g.padding == Padding::Same ? same_pad_begin(wd, g) : 0;
    TensorD y({out_ch, oh, ow});
    for (int o = 0; o < out_ch; ++o)
        for (int oy = 0; oy < oh; ++oy)
            for (int ox = 0; ox < ow; ++ox) {
                double s = b ? (*b)[o] : 0.0;
                for (int ch = 0; ch < c; ++ch)
                    for (int ky = 0; ky < g.kernel; ++ky)
                        for (int kx = 0; kx < g.kernel; ++kx) {
                            const int iy = oy * g.stride - pad_y + ky * g.dilation;
                            const int ix = ox * g.stride - pad_x + kx * g.dilation;
                            if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                            s += x.at(ch, iy, ix) *
                                 w[static_cast<std::int64_t>(o) * w.dim(1) +
                                   (ch * g.kernel + ky) * g.kernel + kx];
                        }
                y.at(o, oy, ox) = s;
            }
    return y;
}

}  // namespace

TEST_CASE("nn: padding arithmetic") {
    CHECK(conv_out_size(257, {3, 2, 1, Padding::Same}) == 129);
    CHECK(conv_out_size(129, {3, 2, 1, Padding::Same}) == 65);
    CHECK(conv_out_size(257, {5, 2, 1, Padding::Same}) == 129);
    CHECK(conv_out_size(65, {3, 1, 16, Padding::Same}) == 65);
    CHECK(conv_out_size(5, {5, 1, 1, Padding::Valid}) == 1);
    CHECK(conv_out_size(2, {2, 1, 1, Padding::Valid}) == 1);
    CHECK_THROWS_AS(conv_out_size(4, {5, 1, 1, Padding::Valid}), ShapeError);
    // 'Same', k3 s1: one pixel each side.
    CHECK(same_pad_begin(65, {3, 1, 1, Padding::Same}) == 1);
    // 'Same', k3 s2 on even input: pad_total = 1, all of it trailing.
    CHECK(same_pad_begin(64, {3, 2, 1, Padding::Same}) == 0);
    // Dilation 16 with k3: effective kernel 33, pad 16 each side.
    CHECK(same_pad_begin(65, {3, 1, 16, Padding::Same}) == 16);
}

TEST_CASE("nn: conv2d matches the direct convolution") {
    Rng rng(501);
    struct Case {
        std::vector<int> x_dims;
        int out_ch;
        ConvGeom g;
    };
    const Case cases[] = {
        {{2, 7, 6}, 3, {3, 1, 1, Padding::Same}},
        {{2, 9, 9}, 2, {3, 2, 1, Padding::Same}},
        {{1, 11, 11}, 2, {3, 1, 2, Padding::Same}},
        {{2, 13, 13}, 1, {3, 1, 4, Padding::Same}},
        {{3, 8, 8}, 2, {5, 2, 1, Padding::Same}},
        {{2, 5, 5}, 4, {5, 1, 1, Padding::Valid}},
        {{2, 6, 6}, 2, {2, 1, 1, Padding::Valid}},
    };
    for (const auto& c : cases) {
        const TensorD x = random_tensor(rng, c.x_dims);
        TensorD w = random_tensor(rng, {c.out_ch, c.x_dims[0] * c.g.kernel * c.g.kernel});
        TensorD b = random_tensor(rng, {c.out_ch});
        const TensorD got = conv2d(x, w, &b, c.g);
        const TensorD want = naive_conv(x, w, &b, c.g);
        REQUIRE(got.same_shape(want));
        for (std::int64_t i = 0; i < got.size(); ++i)
            CHECK(std::abs(got[i] - want[i]) <= 1e-12);
    }
}

TEST_CASE("nn: im2col and col2im are adjoint") {
    Rng rng(502);
    const ConvGeom g{3, 2, 2, Padding::Same};
    const TensorD x = random_tensor(rng, {2, 9, 7});
    int oh = 0, ow = 0;
    const TensorD cols = im2col(x, g, &oh, &ow);
    const TensorD probe = random_tensor(rng, cols.dims());
    // <im2col(x), P> must equal <x, col2im(P)>.
    const double lhs = kernels::dot(cols.data(), probe.data(),
                                    static_cast<std::size_t>(cols.size()));
    const TensorD folded = col2im(probe, 2, 9, 7, g);
    const double rhs =
        kernels::dot(x.data(), folded.data(), static_cast<std::size_t>(x.size()));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("nn: conv2d gradients agree with finite differences") {
    Rng rng(503);
    const ConvGeom g{3, 2, 1, Padding::Same};
    TensorD x = random_tensor(rng, {2, 6, 5});
    TensorD w = random_tensor(rng, {3, 2 * 9});
    TensorD b = random_tensor(rng, {3});
    const TensorD proj = random_tensor(rng, {3, 3, 3});  // fixed projection -> scalar loss

    auto loss = [&]() {
        const TensorD y = conv2d(x, w, &b, g);
        return kernels::dot(y.data(), proj.data(), static_cast<std::size_t>(y.size()));
    };

    TensorD dx, dw(w.dims()), db(b.dims());
    conv2d_backward(x, w, g, proj, &dx, &dw, &db);

    for (std::int64_t i = 0; i < w.size(); ++i)
        CHECK(rel_err(dw[i], fd_central(loss, &w[i])) < 1e-7);
    for (std::int64_t i = 0; i < b.size(); ++i)
        CHECK(rel_err(db[i], fd_central(loss, &b[i])) < 1e-7);
    for (std::int64_t i = 0; i < x.size(); ++i)
        CHECK(rel_err(dx[i], fd_central(loss, &x[i])) < 1e-7);
}

TEST_CASE("nn: activation gradients agree with finite differences") {
    Rng rng(504);
    TensorD x = random_tensor(rng, {40}, 2.0);
    const TensorD proj = random_tensor(rng, {40});

    SUBCASE("elu") {
        auto loss = [&]() {
            const TensorD y = elu(x, 1.0);
            return kernels::dot(y.data(), proj.data(), 40);
        };
        const TensorD dx = elu_backward(elu(x, 1.0), proj, 1.0);
        for (std::int64_t i = 0; i < x.size(); ++i)
            CHECK(rel_err(dx[i], fd_central(loss, &x[i])) < 1e-7);
    }
    SUBCASE("sigmoid") {
        auto loss = [&]() {
            const TensorD y = sigmoid(x);
            return kernels::dot(y.data(), proj.data(), 40);
        };
        const TensorD dx = sigmoid_backward(sigmoid(x), proj);
        for (std::int64_t i = 0; i < x.size(); ++i)
            CHECK(rel_err(dx[i], fd_central(loss, &x[i])) < 1e-7);
    }
    SUBCASE("leaky relu") {
        auto loss = [&]() {
            const TensorD y = leaky_relu(x, 0.2);
            return kernels::dot(y.data(), proj.data(), 40);
        };
        const TensorD dx = leaky_relu_backward(x, proj, 0.2);
        for (std::int64_t i = 0; i < x.size(); ++i)
            CHECK(rel_err(dx[i], fd_central(loss, &x[i])) < 1e-6);
    }
    SUBCASE("hard clip") {
        auto loss = [&]() {
            const TensorD y = hard_clip(x, -1.0, 1.0);
            return kernels::dot(y.data(), proj.data(), 40);
        };
        const TensorD dx = hard_clip_backward(x, proj, -1.0, 1.0);
        for (std::int64_t i = 0; i < x.size(); ++i) {
            if (std::abs(std::abs(x[i]) - 1.0) < 1e-4) continue;  // kink point
            CHECK(rel_err(dx[i], fd_central(loss, &x[i])) < 1e-6);
        }
    }
}

TEST_CASE("nn: instance norm forward moments and backward gradients") {
    Rng rng(505);
    TensorD x = random_tensor(rng, {3, 5, 4}, 2.0);
    TensorD gamma = random_tensor(rng, {3});
    TensorD beta = random_tensor(rng, {3});
    for (std::int64_t i = 0; i < gamma.size(); ++i) gamma[i] += 1.5;  // keep away from 0

    InstanceNormCache<double> cache;
    const TensorD y = instance_norm(x, gamma, beta, 1e-5, &cache);

    // Normalized activations have zero mean and unit population variance.
    const std::int64_t hw = 20;
    for (int c = 0; c < 3; ++c) {
        double mean = 0, var = 0;
        for (std::int64_t i = 0; i < hw; ++i) mean += cache.xhat[c * hw + i];
        mean /= hw;
        for (std::int64_t i = 0; i < hw; ++i) {
            const double d = cache.xhat[c * hw + i] - mean;
            var += d * d;
        }
        var /= hw;
        CHECK(std::abs(mean) < 1e-12);
        CHECK(std::abs(var - 1.0) < 1e-4);  // off by eps/(var+eps) only
    }

    const TensorD proj = random_tensor(rng, {3, 5, 4});
    InstanceNormCache<double> scratch;
    auto loss = [&]() {
        const TensorD out = instance_norm(x, gamma, beta, 1e-5, &scratch);
        return kernels::dot(out.data(), proj.data(), static_cast<std::size_t>(out.size()));
    };
    TensorD dgamma(gamma.dims()), dbeta(beta.dims());
    const TensorD dx = instance_norm_backward(proj, cache, gamma, &dgamma, &dbeta);
    for (std::int64_t i = 0; i < x.size(); ++i)
        CHECK(rel_err(dx[i], fd_central(loss, &x[i])) < 1e-6);
    for (std::int64_t i = 0; i < gamma.size(); ++i) {
        CHECK(rel_err(dgamma[i], fd_central(loss, &gamma[i])) < 1e-7);
        CHECK(rel_err(dbeta[i], fd_central(loss, &beta[i])) < 1e-7);
    }
}

TEST_CASE("nn: bilinear resize half-pixel semantics") {
    // Doubling a 2-sample axis: sources land at -0.25, 0.25, 0.75, 1.25.
    TensorD x({1, 1, 2});
    x[0] = 1.0;
    x[1] = 5.0;
    const TensorD y = bilinear_resize(x, 1, 4);
    CHECK(y[0] == doctest::Approx(1.0));
    CHECK(y[1] == doctest::Approx(0.75 * 1.0 + 0.25 * 5.0));
    CHECK(y[2] == doctest::Approx(0.25 * 1.0 + 0.75 * 5.0));
    CHECK(y[3] == doctest::Approx(5.0));

    // Same-size resize is the identity.
    Rng rng(506);
    const TensorD id_in = random_tensor(rng, {2, 5, 7});
    const TensorD id_out = bilinear_resize(id_in, 5, 7);
    for (std::int64_t i = 0; i < id_in.size(); ++i)
        CHECK(id_out[i] == doctest::Approx(id_in[i]).epsilon(1e-12));

    // Odd-size round trip used by the decoder: 65 -> 129 exists, and the
    // backward pass is the exact adjoint of the forward one.
    const TensorD a = random_tensor(rng, {1, 6, 5});
    const TensorD probe = random_tensor(rng, {1, 13, 9});
    const TensorD fwd = bilinear_resize(a, 13, 9);
    const TensorD back = bilinear_resize_backward(probe, 6, 5);
    const double lhs =
        kernels::dot(fwd.data(), probe.data(), static_cast<std::size_t>(fwd.size()));
    const double rhs = kernels::dot(a.data(), back.data(), static_cast<std::size_t>(a.size()));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("nn: fully connected gradients") {
    Rng rng(507);
    TensorD x = random_tensor(rng, {7});
    TensorD w = random_tensor(rng, {3, 7});
    TensorD b = random_tensor(rng, {3});
    const TensorD proj = random_tensor(rng, {3});
    auto loss = [&]() {
        const TensorD y = fc(x, w, &b);
        return kernels::dot(y.data(), proj.data(), 3);
    };
    TensorD dx({7}), dw(w.dims()), db(b.dims());
    fc_backward(x, w, proj, &dx, &dw, &db);
    for (std::int64_t i = 0; i < w.size(); ++i)
        CHECK(rel_err(dw[i], fd_central(loss, &w[i])) < 1e-8);
    for (std::int64_t i = 0; i < x.size(); ++i)
        CHECK(rel_err(dx[i], fd_central(loss, &x[i])) < 1e-8);
    for (std::int64_t i = 0; i < b.size(); ++i)
        CHECK(rel_err(db[i], fd_central(loss, &b[i])) < 1e-8);
}

TEST_CASE("nn: spectral norm fixed points") {
    Rng rng(508);
    SUBCASE("identity is unchanged") {
        TensorD w({4, 4});
        for (int i = 0; i < 4; ++i) w.at(i, i) = 1.0;
        SpectralNorm<double> sn;
        sn.init(4, 4, rng);
        for (int it = 0; it < 50; ++it) sn.advance(w);
        TensorD wbar;
        const double sigma = sn.normalize_into(w, wbar);
        CHECK(sigma == doctest::Approx(1.0).epsilon(1e-10));
        for (std::int64_t i = 0; i < w.size(); ++i)
            CHECK(wbar[i] == doctest::Approx(w[i]).epsilon(1e-10));
    }
    SUBCASE("scaled identity is normalized back to unit gain") {
        TensorD w({4, 4});
        for (int i = 0; i < 4; ++i) w.at(i, i) = 3.0;
        SpectralNorm<double> sn;
        sn.init(4, 4, rng);
        for (int it = 0; it < 50; ++it) sn.advance(w);
        TensorD wbar;
        const double sigma = sn.normalize_into(w, wbar);
        CHECK(sigma == doctest::Approx(3.0).epsilon(1e-10));
        for (int i = 0; i < 4; ++i) CHECK(wbar.at(i, i) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("nn: spectral norm against a full SVD") {
    Rng rng(509);
    for (int trial = 0; trial < 10; ++trial) {
        const int m = 5 + static_cast<int>(rng.uniform_int(0, 8));
        const int n = 5 + static_cast<int>(rng.uniform_int(0, 8));
        TensorD w = random_tensor(rng, {m, n});
        SpectralNorm<double> sn;
        sn.init(m, n, rng);
        for (int it = 0; it < 50; ++it) sn.advance(w);
        TensorD wbar;
        sn.normalize_into(w, wbar);

        Eigen::MatrixXd mat(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) mat(i, j) = wbar.at(i, j);
        const double top = mat.jacobiSvd().singularValues()(0);
        CHECK(top > 0.99);
        CHECK(top < 1.01);
    }
}

TEST_CASE("nn: spectral norm zero-weight guard") {
    Rng rng(510);
    TensorD w({3, 3});  // all zero
    SpectralNorm<double> sn;
    sn.init(3, 3, rng);
    const TensorD u_before = sn.u;
    sn.advance(w);  // must not corrupt the state
    for (std::int64_t i = 0; i < u_before.size(); ++i) CHECK(sn.u[i] == u_before[i]);
    TensorD wbar;
    const double sigma = sn.normalize_into(w, wbar);
    CHECK(sigma == 1.0);
    CHECK(sn.degenerate);
    for (std::int64_t i = 0; i < w.size(); ++i) CHECK(wbar[i] == 0.0);
}

TEST_CASE("nn: spectral norm backward agrees with finite differences") {
    Rng rng(511);
    TensorD w = random_tensor(rng, {5, 4});
    SpectralNorm<double> sn;
    sn.init(5, 4, rng);
    for (int it = 0; it < 30; ++it) sn.advance(w);

    const TensorD proj = random_tensor(rng, {5, 4});
    // Loss through the *frozen* (u, v): exactly what one training step sees.
    auto loss = [&]() {
        TensorD wbar;
        sn.normalize_into(w, wbar);
        return kernels::dot(wbar.data(), proj.data(), static_cast<std::size_t>(wbar.size()));
    };
    TensorD wbar;
    const double sigma = sn.normalize_into(w, wbar);
    TensorD dw(w.dims());
    sn.backward(wbar, sigma, proj, dw);
    for (std::int64_t i = 0; i < w.size(); ++i)
        CHECK(rel_err(dw[i], fd_central(loss, &w[i])) < 1e-7);
}
