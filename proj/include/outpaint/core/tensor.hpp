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

#include <cassert>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "outpaint/core/errors.hpp"

namespace outpaint {

/// Dense row-major tensor. Images and feature maps use CHW order.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
        std::size_t n = 1;
        for (int d : dims_) {
            if (d <= 0) throw ShapeError("tensor dimension must be positive");
            n *= static_cast<std::size_t>(d);
        }
        data_.assign(n, T(0));
    }

    static Tensor zeros(std::vector<int> dims) { return Tensor(std::move(dims)); }

    static Tensor full(std::vector<int> dims, T value) {
        Tensor t(std::move(dims));
        t.fill(value);
        return t;
    }

    int rank() const { return static_cast<int>(dims_.size()); }

    int dim(int i) const {
        assert(i >= 0 && i < rank());
        return dims_[static_cast<std::size_t>(i)];
    }

    const std::vector<int>& dims() const { return dims_; }

    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // Rank-3 (C,H,W) accessors.
    T& at(int c, int y, int x) {
        assert(rank() == 3);
        return data_[(static_cast<std::size_t>(c) * dims_[1] + y) * dims_[2] + x];
    }
    const T& at(int c, int y, int x) const {
        return const_cast<Tensor*>(this)->at(c, y, x);
    }

    // Rank-2 (rows, cols) accessors.
    T& at(int r, int c) {
        assert(rank() == 2);
        return data_[static_cast<std::size_t>(r) * dims_[1] + c];
    }
    const T& at(int r, int c) const { return const_cast<Tensor*>(this)->at(r, c); }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool same_shape(const Tensor& other) const { return dims_ == other.dims_; }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out(dims_);
        for (std::int64_t i = 0; i < size(); ++i) out[i] = static_cast<U>(data_[i]);
        return out;
    }

private:
    std::vector<int> dims_;
    std::vector<T> data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace outpaint
