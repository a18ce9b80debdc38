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
#include <iosfwd>
#include <string>
#include <vector>

#include "outpaint/conditioning.hpp"
#include "outpaint/core/rng.hpp"
#include "outpaint/core/tensor.hpp"
#include "outpaint/losses.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/nn/adam.hpp"
#include "outpaint/nn/discriminator.hpp"
#include "outpaint/nn/generator.hpp"

namespace outpaint::train {

struct TrainingConfig {
    double g_lr = 1e-4;
    double d_lr = 1e-3;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double adam_eps = 1e-8;
    int batch_size = 8;
    int steps = 0;
    masking::MaskSpec mask_spec;  // callers normally set jitter_px = 4
    bool no_cond = false;
    bool no_skip = false;
    bool no_instance_norm = false;
    std::uint64_t seed = 0;
    int checkpoint_every = 0;  // 0 = no periodic checkpoints

    // Zero learning rates are allowed: they turn a step into a pure
    // measurement, which the tests rely on. Negative values are rejected.
    void validate() const;
};

struct StepMetrics {
    std::int64_t step = 0;
    double l_rec = 0;
    double l_adv_d = 0;
    double l_adv_g = 0;
    double d_real_mean = 0;
    double d_fake_mean = 0;
    double l_perc = 0;  // raw stabilizer values; 0 when the term is off
    double l_fm = 0;
    double l_total = 0;
};

struct TrainExample {
    std::string id;
    TensorF image;  // (3, S, S) in [-1, 1]
};

// Joint adversarial optimization: per step, one discriminator update on the
// hinge loss over the current generator's composites, then one generator
// update against the freshly updated discriminator. A new jittered mask is
// drawn per step and shared across the batch; the discriminator only ever
// sees composites, never raw generator output.
class Trainer {
public:
    Trainer(nn::GeneratorConfig g_cfg, nn::DiscriminatorConfig d_cfg,
            TrainingConfig t_cfg, losses::LossWeights weights,
            const conditioning::EmbeddingProvider* perceptual_provider = nullptr);

    // One optimization step. `cache` supplies normalized conditioning vectors
    // by example id; pass nullptr only when conditioning is ablated.
    StepMetrics train_step(const std::vector<const TrainExample*>& batch,
                           const conditioning::EmbeddingCache* cache);

    // Runs until cfg.steps, appending one metrics record per step to
    // `metrics_out` (with a hyperparameter header on the first step) and
    // writing periodic checkpoints into `checkpoint_dir` when configured.
    // Returns the metrics of the last executed step.
    StepMetrics train(const std::vector<TrainExample>& dataset,
                      const conditioning::EmbeddingCache* cache,
                      std::ostream* metrics_out, const std::string& checkpoint_dir);

    void save_checkpoint(const std::string& path);
    static Trainer load_checkpoint(
        const std::string& path,
        const conditioning::EmbeddingProvider* perceptual_provider = nullptr);

    nn::Generator<float>& generator() { return g_; }
    nn::Discriminator<float>& discriminator() { return d_; }
    const nn::GeneratorConfig& generator_config() const { return g_cfg_; }
    const nn::DiscriminatorConfig& discriminator_config() const { return d_cfg_; }
    const TrainingConfig& training_config() const { return cfg_; }
    const losses::LossWeights& loss_weights() const { return weights_; }
    std::int64_t step() const { return step_; }
    // Mask drawn by the most recent step; empty before the first step.
    const masking::Mask& last_mask() const { return last_mask_; }
    // Raises the step budget, e.g. to continue a loaded checkpoint.
    void set_total_steps(int steps);

    static void write_metrics_header(std::ostream& out, const TrainingConfig& cfg);
    static void write_metrics_record(std::ostream& out, const StepMetrics& m);

private:
    std::vector<int> next_batch_indices(std::size_t dataset_size);

    nn::GeneratorConfig g_cfg_;
    nn::DiscriminatorConfig d_cfg_;
    TrainingConfig cfg_;
    losses::LossWeights weights_;
    const conditioning::EmbeddingProvider* perc_provider_ = nullptr;

    nn::Generator<float> g_;
    nn::Discriminator<float> d_;
    nn::AdamOptimizer<float> g_opt_;
    nn::AdamOptimizer<float> d_opt_;
    Rng rng_;  // masks and shuffles; network init uses derived one-shot seeds
    std::int64_t step_ = 0;
    std::vector<int> perm_;
    std::size_t cursor_ = 0;
    masking::Mask last_mask_;
};

}  // namespace outpaint::train
