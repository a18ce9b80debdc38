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
#include <string>
#include <vector>

#include "json.hpp"
#include "outpaint/datapipe.hpp"
#include "outpaint/losses.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/nn/discriminator.hpp"
#include "outpaint/nn/generator.hpp"
#include "outpaint/panorama.hpp"
#include "outpaint/trainer.hpp"

namespace outpaint::config {

// JSON round-trips for the configuration structs. Only the tunable knobs are
// serialized; fixed architecture tables (the generator layer list, the
// discriminator tower) always come from the built-in defaults.

nlohmann::json to_json(const nn::GeneratorConfig& c);
nn::GeneratorConfig generator_from_json(const nlohmann::json& j);

nlohmann::json to_json(const nn::DiscriminatorConfig& c);
nn::DiscriminatorConfig discriminator_from_json(const nlohmann::json& j);

nlohmann::json to_json(const masking::MaskSpec& s);
masking::MaskSpec mask_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const losses::LossWeights& w);
losses::LossWeights loss_weights_from_json(const nlohmann::json& j);

nlohmann::json to_json(const train::TrainingConfig& c);
train::TrainingConfig training_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Whole-run configuration: one declarative file drives every subcommand.

// Dataset section. `root` points at class-named subdirectories; `synthetic`
// generates the built-in texture dataset into `root` first.
struct DataConfig {
    std::string root = "data";
    std::string train_manifest = "train.manifest";
    std::string eval_manifest = "eval.manifest";
    int target_h = 257;
    int target_w = 257;
    int top_k = 0;  // 0 keeps all classes
    std::vector<std::string> class_whitelist;
    int holdout_per_class = 0;
    std::string on_corrupt = "error";  // or "skip"
    bool synthetic = false;
    int synthetic_per_class = 24;

    data::OnCorrupt on_corrupt_policy() const;  // throws ConfigError
    void validate() const;
};

// Embedding/provider section shared by precompute and evaluation.
struct EvaluationConfig {
    std::string provider = "stub";      // or "classifier"
    std::string classifier_weights;     // OPNT file for the classifier path
    int embed_dim = 1000;  // matches the discriminator conditioning width
    std::uint64_t provider_seed = 0;
    std::string cache_file = "embeddings.cache";
    std::string stats_file = "embeddings.stats";

    void validate() const;
};

struct RunConfig {
    DataConfig data;
    nn::GeneratorConfig generator;        // file section model.generator
    nn::DiscriminatorConfig discriminator;  // file section model.discriminator
    losses::LossWeights losses;
    train::TrainingConfig training;
    EvaluationConfig evaluation;
    panorama::PanoramaConfig panorama;

    void validate() const;
};

nlohmann::json to_json(const DataConfig& c);
DataConfig data_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvaluationConfig& c);
EvaluationConfig evaluation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const panorama::PanoramaConfig& c);
panorama::PanoramaConfig panorama_from_json(const nlohmann::json& j);

// Serializes with the ablation switches (no_cond, no_skip, no_instance_norm)
// mirrored at the top level next to the sections.
nlohmann::json to_json(const RunConfig& c);

// Strict parse: every key in `j` must be one the round-trip emits, at every
// nesting level; anything else raises ConfigError naming the offending path.
// Top-level ablation flags, when present, override the training section.
RunConfig run_config_from_json(const nlohmann::json& j);

// Reads and strictly parses a JSON config file. Throws ConfigError on
// malformed JSON and DataError when the file cannot be read.
RunConfig load_run_config(const std::string& path);

// Applies one "dotted.path=value" override in place. The value is parsed as
// JSON when possible (numbers, booleans, arrays) and as a bare string
// otherwise. Unknown paths are caught by the strict parse afterwards.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Stable 16-hex-digit digest of the canonicalized config, for run naming.
std::string config_hash(const nlohmann::json& j);

}  // namespace outpaint::config
