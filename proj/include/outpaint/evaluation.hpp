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

#include <iosfwd>
#include <string>
#include <vector>

#include "outpaint/conditioning.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/nn/generator.hpp"
#include "outpaint/trainer.hpp"

namespace outpaint::evaluation {

// Per-dimension Gaussian fit. The covariance is kept diagonal on purpose:
// with evaluation sets this small a full covariance estimate is rank
// deficient, and the Frechet distance between commuting diagonal Gaussians
// has a stable closed form.
struct GaussianStats {
    std::vector<double> mean;
    std::vector<double> var;  // unbiased, per dimension
    int n = 0;
};

// Sample mean and unbiased variance per dimension; needs at least two rows.
GaussianStats fit_gaussian(const std::vector<TensorF>& features);

// ||mu_a - mu_b||^2 + sum_i (sqrt(var_a_i) - sqrt(var_b_i))^2, the Frechet
// distance specialized to diagonal covariances.
double fid_diagonal(const GaussianStats& a, const GaussianStats& b);

// PSNR over the unknown region only, computed in [0, 1] scale with peak 1
// after mapping the [-1, 1] images; an exact match (and anything above the
// sentinel) reports the 99 dB cap.
double psnr_masked(const TensorF& x, const TensorF& x_hat, const masking::Mask& m);

constexpr double kPsnrCapDb = 99.0;

struct EvalRecord {
    std::string id;
    double psnr = 0;
};

struct EvalReport {
    double fid = 0;               // embedding-feature distance, full images
    double mean_masked_psnr = 0;  // dB, capped per image
    int count = 0;
    std::vector<EvalRecord> per_image;
};

// Metrics for prepared (real, output) pairs sharing one mask.
EvalReport evaluate_pairs(const std::vector<train::TrainExample>& real_images,
                          const std::vector<TensorF>& outputs,
                          const masking::Mask& m,
                          const conditioning::EmbeddingProvider& provider);

// Runs the generator over the evaluation set under a fixed mask (any jitter
// in mask_spec is forced to zero), then scores composites against ground
// truth.
EvalReport evaluate_model(nn::Generator<float>& g,
                          const std::vector<train::TrainExample>& eval_set,
                          masking::MaskSpec mask_spec,
                          const conditioning::EmbeddingProvider& provider);

// Structured text report: one "name value" line per metric, then one line
// per image. Values are printed round-trip exact.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace outpaint::evaluation
