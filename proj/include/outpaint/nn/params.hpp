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

#include <string>

#include "outpaint/core/rng.hpp"
#include "outpaint/core/tensor.hpp"

namespace outpaint::nn {

// One named, trainable tensor with its gradient buffer. Networks expose
// their parameters as ordered lists of these; the optimizer and the
// checkpoint format both key off the names.
template <typename T>
struct ParamEntry {
    std::string name;
    Tensor<T>* value = nullptr;
    Tensor<T>* grad = nullptr;
};

// Channel count after applying a width multiplier: ceil(multiplier * value),
// never below one. Shared by every width-scalable network in the project.
int scaled_channels(int table_value, double width_multiplier);

// Truncated-normal initialization with fan-in scaling: std = sqrt(2/fan_in),
// samples beyond two standard deviations are redrawn.
template <typename T>
void init_conv_weight(Tensor<T>& w, int fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / fan_in);
    for (std::int64_t i = 0; i < w.size(); ++i) {
        double v = rng.normal();
        while (std::abs(v) > 2.0) v = rng.normal();
        w[i] = static_cast<T>(v * stddev);
    }
}

}  // namespace outpaint::nn
