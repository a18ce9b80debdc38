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

#include "outpaint/core/errors.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/nn/params.hpp"

namespace outpaint::nn {

// Adam with bias correction. Moments are kept per parameter tensor, matched
// positionally against the parameter registry; the arithmetic runs in double
// so float training sees a stable update direction. The learning rate is an
// argument of step() rather than state, so a zero rate is a valid no-op probe.
template <typename T>
class AdamOptimizer {
public:
    struct Slot {
        std::string name;
        Tensor<T> m, v;
    };

    AdamOptimizer(double beta1, double beta2, double eps)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
            throw ConfigError("adam: betas must lie in [0, 1)");
        if (!(eps > 0.0)) throw ConfigError("adam: eps must be > 0");
    }

    void attach(const std::vector<ParamEntry<T>>& params) {
        slots_.clear();
        slots_.reserve(params.size());
        for (const auto& p : params) {
            Slot s;
            s.name = p.name;
            s.m = Tensor<T>(p.value->dims());
            s.v = Tensor<T>(p.value->dims());
            slots_.push_back(std::move(s));
        }
        t_ = 0;
    }

    void step(const std::vector<ParamEntry<T>>& params, double lr) {
        if (params.size() != slots_.size())
            throw ShapeError("adam: parameter registry does not match optimizer state");
        ++t_;
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            Slot& s = slots_[k];
            const Tensor<T>& g = *params[k].grad;
            Tensor<T>& w = *params[k].value;
            if (!g.same_shape(s.m) || !w.same_shape(s.m))
                throw ShapeError("adam: tensor shape changed under optimizer: " + s.name);
            for (std::int64_t i = 0; i < g.size(); ++i) {
                const double gi = static_cast<double>(g[i]);
                const double m = beta1_ * s.m[i] + (1.0 - beta1_) * gi;
                const double v = beta2_ * s.v[i] + (1.0 - beta2_) * gi * gi;
                s.m[i] = static_cast<T>(m);
                s.v[i] = static_cast<T>(v);
                const double update = lr * (m / c1) / (std::sqrt(v / c2) + eps_);
                w[i] = static_cast<T>(w[i] - update);
            }
        }
    }

    std::int64_t t() const { return t_; }
    void set_t(std::int64_t t) { t_ = t; }
    std::vector<Slot>& slots() { return slots_; }
    const std::vector<Slot>& slots() const { return slots_; }
    double beta1() const { return beta1_; }
    double beta2() const { return beta2_; }
    double eps() const { return eps_; }

private:
    double beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<Slot> slots_;
};

}  // namespace outpaint::nn
