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

#include <stdexcept>
#include <string>

namespace outpaint {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration: invalid values, unknown keys, version mismatches of
// config-bearing artifacts. CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Bad or missing input data: unreadable files, cache misses, empty datasets,
// incompatible input sizes. CLI exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

// Numerical abort: non-finite losses or gradients during optimization.
// CLI exit code 4.
class NumericError : public Error {
public:
    using Error::Error;
};

// Tensor shape contract violations.
class ShapeError : public Error {
public:
    using Error::Error;
};

}  // namespace outpaint
