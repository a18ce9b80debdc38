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

#include "outpaint/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "outpaint/core/errors.hpp"

namespace outpaint::config {

using nlohmann::json;

namespace {

// Strict field lookup: unknown keys elsewhere are tolerated (forward
// compatibility), but a typo in a key we do read must not silently fall back
// to a default, so reads go through `at` with a contextual error.
template <typename T>
T field(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

}  // namespace

json to_json(const nn::GeneratorConfig& c) {
    return json{{"width_multiplier", c.width_multiplier},
                {"use_skips", c.use_skips},
                {"use_instance_norm", c.use_instance_norm},
                {"norm_before_gating", c.norm_before_gating},
                {"elu_alpha", c.elu_alpha}};
}

nn::GeneratorConfig generator_from_json(const json& j) {
    nn::GeneratorConfig c;
    c.width_multiplier = field(j, "width_multiplier", c.width_multiplier);
    c.use_skips = field(j, "use_skips", c.use_skips);
    c.use_instance_norm = field(j, "use_instance_norm", c.use_instance_norm);
    c.norm_before_gating = field(j, "norm_before_gating", c.norm_before_gating);
    c.elu_alpha = field(j, "elu_alpha", c.elu_alpha);
    return c;
}

json to_json(const nn::DiscriminatorConfig& c) {
    return json{{"width_multiplier", c.width_multiplier},
                {"embed_dim", c.embed_dim},
                {"use_conditioning", c.use_conditioning},
                {"leaky_slope", c.leaky_slope},
                {"input_size", c.input_size}};
}

nn::DiscriminatorConfig discriminator_from_json(const json& j) {
    nn::DiscriminatorConfig c;
    c.width_multiplier = field(j, "width_multiplier", c.width_multiplier);
    c.embed_dim = field(j, "embed_dim", c.embed_dim);
    c.use_conditioning = field(j, "use_conditioning", c.use_conditioning);
    c.leaky_slope = field(j, "leaky_slope", c.leaky_slope);
    c.input_size = field(j, "input_size", c.input_size);
    return c;
}

json to_json(const masking::MaskSpec& s) {
    json j{{"fraction", s.fraction}, {"jitter_px", s.jitter_px}, {"seed", s.seed}};
    switch (s.geometry) {
        case masking::MaskGeometry::RightStrip: j["geometry"] = "right_strip"; break;
        case masking::MaskGeometry::CentralSquare: j["geometry"] = "central_square"; break;
        case masking::MaskGeometry::FreeForm: {
            j["geometry"] = "free_form";
            j["bitmap_height"] = s.bitmap.rank() == 2 ? s.bitmap.dim(0) : 0;
            j["bitmap_width"] = s.bitmap.rank() == 2 ? s.bitmap.dim(1) : 0;
            std::string bits;
            bits.reserve(static_cast<std::size_t>(s.bitmap.size()));
            for (std::int64_t i = 0; i < s.bitmap.size(); ++i)
                bits.push_back(s.bitmap[i] == 0.0f ? '0' : '1');
            j["bitmap"] = bits;
            break;
        }
    }
    return j;
}

masking::MaskSpec mask_spec_from_json(const json& j) {
    masking::MaskSpec s;
    const std::string geom = field<std::string>(j, "geometry", "right_strip");
    if (geom == "right_strip") s.geometry = masking::MaskGeometry::RightStrip;
    else if (geom == "central_square") s.geometry = masking::MaskGeometry::CentralSquare;
    else if (geom == "free_form") s.geometry = masking::MaskGeometry::FreeForm;
    else throw ConfigError("config: unknown mask geometry '" + geom + "'");
    s.fraction = field(j, "fraction", s.fraction);
    s.jitter_px = field(j, "jitter_px", s.jitter_px);
    s.seed = field(j, "seed", s.seed);
    if (s.geometry == masking::MaskGeometry::FreeForm) {
        const int h = field(j, "bitmap_height", 0);
        const int w = field(j, "bitmap_width", 0);
        const std::string bits = field<std::string>(j, "bitmap", "");
        if (h <= 0 || w <= 0 || bits.size() != static_cast<std::size_t>(h) * w)
            throw ConfigError("config: free-form mask bitmap is malformed");
        s.bitmap = masking::Mask({h, w});
        for (std::int64_t i = 0; i < s.bitmap.size(); ++i) {
            if (bits[static_cast<std::size_t>(i)] != '0' &&
                bits[static_cast<std::size_t>(i)] != '1')
                throw ConfigError("config: free-form mask bitmap is malformed");
            s.bitmap[i] = bits[static_cast<std::size_t>(i)] == '1' ? 1.0f : 0.0f;
        }
    }
    return s;
}

json to_json(const losses::LossWeights& w) {
    return json{{"lambda_adv", w.lambda_adv},
                {"stabilizer", losses::stabilizer_name(w.stabilizer)},
                {"perceptual_weight", w.perceptual_weight},
                {"feature_matching_weight", w.feature_matching_weight}};
}

losses::LossWeights loss_weights_from_json(const json& j) {
    losses::LossWeights w;
    w.lambda_adv = field(j, "lambda_adv", w.lambda_adv);
    w.stabilizer = losses::stabilizer_from_name(
        field<std::string>(j, "stabilizer", losses::stabilizer_name(w.stabilizer)));
    w.perceptual_weight = field(j, "perceptual_weight", w.perceptual_weight);
    w.feature_matching_weight =
        field(j, "feature_matching_weight", w.feature_matching_weight);
    return w;
}

json to_json(const train::TrainingConfig& c) {
    return json{{"g_lr", c.g_lr},
                {"d_lr", c.d_lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_eps", c.adam_eps},
                {"batch_size", c.batch_size},
                {"steps", c.steps},
                {"mask", to_json(c.mask_spec)},
                {"no_cond", c.no_cond},
                {"no_skip", c.no_skip},
                {"no_instance_norm", c.no_instance_norm},
                {"seed", c.seed},
                {"checkpoint_every", c.checkpoint_every}};
}

train::TrainingConfig training_from_json(const json& j) {
    train::TrainingConfig c;
    c.g_lr = field(j, "g_lr", c.g_lr);
    c.d_lr = field(j, "d_lr", c.d_lr);
    c.beta1 = field(j, "beta1", c.beta1);
    c.beta2 = field(j, "beta2", c.beta2);
    c.adam_eps = field(j, "adam_eps", c.adam_eps);
    c.batch_size = field(j, "batch_size", c.batch_size);
    c.steps = field(j, "steps", c.steps);
    if (j.contains("mask")) c.mask_spec = mask_spec_from_json(j.at("mask"));
    c.no_cond = field(j, "no_cond", c.no_cond);
    c.no_skip = field(j, "no_skip", c.no_skip);
    c.no_instance_norm = field(j, "no_instance_norm", c.no_instance_norm);
    c.seed = field(j, "seed", c.seed);
    c.checkpoint_every = field(j, "checkpoint_every", c.checkpoint_every);
    return c;
}

// ---------------------------------------------------------------------------
// Whole-run configuration.

data::OnCorrupt DataConfig::on_corrupt_policy() const {
    if (on_corrupt == "error") return data::OnCorrupt::Error;
    if (on_corrupt == "skip") return data::OnCorrupt::Skip;
    throw ConfigError("config: on_corrupt must be 'error' or 'skip', got '" +
                      on_corrupt + "'");
}

void DataConfig::validate() const {
    (void)on_corrupt_policy();
    if (root.empty()) throw ConfigError("config: data.root must be set");
    if (train_manifest.empty() || eval_manifest.empty())
        throw ConfigError("config: manifest file names must be set");
    if (target_h <= 0 || target_w <= 0)
        throw ConfigError("config: data target size must be positive");
    if (top_k < 0) throw ConfigError("config: data.top_k must be >= 0");
    if (holdout_per_class < 0)
        throw ConfigError("config: data.holdout_per_class must be >= 0");
    if (synthetic && synthetic_per_class <= 0)
        throw ConfigError("config: data.synthetic_per_class must be positive");
}

void EvaluationConfig::validate() const {
    if (provider != "stub" && provider != "classifier")
        throw ConfigError("config: evaluation.provider must be 'stub' or 'classifier'");
    if (provider == "classifier" && classifier_weights.empty())
        throw ConfigError("config: evaluation.classifier_weights must be set for the classifier provider");
    if (embed_dim <= 0) throw ConfigError("config: evaluation.embed_dim must be positive");
    if (cache_file.empty() || stats_file.empty())
        throw ConfigError("config: evaluation cache/stats file names must be set");
}

void RunConfig::validate() const {
    data.validate();
    evaluation.validate();
    losses.validate();
    training.validate();
    panorama.validate();
    if (discriminator.use_conditioning && !training.no_cond &&
        discriminator.embed_dim != evaluation.embed_dim)
        throw ConfigError("config: discriminator.embed_dim must match evaluation.embed_dim when conditioning is on");
    if (data.target_h != data.target_w ||
        data.target_h != discriminator.input_size)
        throw ConfigError(
            "config: data target size must be square and equal "
            "model.discriminator.input_size (training images feed the critic)");
}

json to_json(const DataConfig& c) {
    return json{{"root", c.root},
                {"train_manifest", c.train_manifest},
                {"eval_manifest", c.eval_manifest},
                {"target_h", c.target_h},
                {"target_w", c.target_w},
                {"top_k", c.top_k},
                {"class_whitelist", c.class_whitelist},
                {"holdout_per_class", c.holdout_per_class},
                {"on_corrupt", c.on_corrupt},
                {"synthetic", c.synthetic},
                {"synthetic_per_class", c.synthetic_per_class}};
}

DataConfig data_from_json(const json& j) {
    DataConfig c;
    c.root = field(j, "root", c.root);
    c.train_manifest = field(j, "train_manifest", c.train_manifest);
    c.eval_manifest = field(j, "eval_manifest", c.eval_manifest);
    c.target_h = field(j, "target_h", c.target_h);
    c.target_w = field(j, "target_w", c.target_w);
    c.top_k = field(j, "top_k", c.top_k);
    c.class_whitelist = field(j, "class_whitelist", c.class_whitelist);
    c.holdout_per_class = field(j, "holdout_per_class", c.holdout_per_class);
    c.on_corrupt = field(j, "on_corrupt", c.on_corrupt);
    c.synthetic = field(j, "synthetic", c.synthetic);
    c.synthetic_per_class = field(j, "synthetic_per_class", c.synthetic_per_class);
    return c;
}

json to_json(const EvaluationConfig& c) {
    return json{{"provider", c.provider},
                {"classifier_weights", c.classifier_weights},
                {"embed_dim", c.embed_dim},
                {"provider_seed", c.provider_seed},
                {"cache_file", c.cache_file},
                {"stats_file", c.stats_file}};
}

EvaluationConfig evaluation_from_json(const json& j) {
    EvaluationConfig c;
    c.provider = field(j, "provider", c.provider);
    c.classifier_weights = field(j, "classifier_weights", c.classifier_weights);
    c.embed_dim = field(j, "embed_dim", c.embed_dim);
    c.provider_seed = field(j, "provider_seed", c.provider_seed);
    c.cache_file = field(j, "cache_file", c.cache_file);
    c.stats_file = field(j, "stats_file", c.stats_file);
    return c;
}

json to_json(const panorama::PanoramaConfig& c) {
    return json{{"seed_width", c.seed_width},
                {"pad_width", c.pad_width},
                {"window_height", c.window_height},
                {"steps", c.steps},
                {"max_width", c.max_width}};
}

panorama::PanoramaConfig panorama_from_json(const json& j) {
    panorama::PanoramaConfig c;
    c.seed_width = field(j, "seed_width", c.seed_width);
    c.pad_width = field(j, "pad_width", c.pad_width);
    c.window_height = field(j, "window_height", c.window_height);
    c.steps = field(j, "steps", c.steps);
    c.max_width = field(j, "max_width", c.max_width);
    return c;
}

json to_json(const RunConfig& c) {
    return json{{"data", to_json(c.data)},
                {"model", json{{"generator", to_json(c.generator)},
                               {"discriminator", to_json(c.discriminator)}}},
                {"losses", to_json(c.losses)},
                {"training", to_json(c.training)},
                {"evaluation", to_json(c.evaluation)},
                {"panorama", to_json(c.panorama)},
                {"no_cond", c.training.no_cond},
                {"no_skip", c.training.no_skip},
                {"no_instance_norm", c.training.no_instance_norm}};
}

namespace {

// Walks `given` against the canonical `allowed` shape and raises on any key
// the round-trip would never emit, so typos cannot silently become defaults.
void reject_unknown_keys(const json& given, const json& allowed,
                         const std::string& path) {
    if (!given.is_object()) return;
    if (!allowed.is_object())
        throw ConfigError("config: '" + path + "' does not take nested keys");
    for (const auto& [key, value] : given.items()) {
        const std::string where = path.empty() ? key : path + "." + key;
        if (!allowed.contains(key))
            throw ConfigError("config: unknown key '" + where + "'");
        reject_unknown_keys(value, allowed.at(key), where);
    }
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    RunConfig c;
    if (j.contains("data")) c.data = data_from_json(j.at("data"));
    if (j.contains("model")) {
        const json& m = j.at("model");
        if (m.contains("generator")) c.generator = generator_from_json(m.at("generator"));
        if (m.contains("discriminator"))
            c.discriminator = discriminator_from_json(m.at("discriminator"));
    }
    if (j.contains("losses")) c.losses = loss_weights_from_json(j.at("losses"));
    if (j.contains("training")) c.training = training_from_json(j.at("training"));
    if (j.contains("evaluation")) c.evaluation = evaluation_from_json(j.at("evaluation"));
    if (j.contains("panorama")) c.panorama = panorama_from_json(j.at("panorama"));
    c.training.no_cond = field(j, "no_cond", c.training.no_cond);
    c.training.no_skip = field(j, "no_skip", c.training.no_skip);
    c.training.no_instance_norm = field(j, "no_instance_norm", c.training.no_instance_norm);

    // The canonical shape of the parsed config bounds the accepted keys
    // (free-form masks legitimately add bitmap fields, so the bound comes
    // from the parsed value, not from the defaults).
    reject_unknown_keys(j, to_json(c), "");
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("config: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return run_config_from_json(j);
}

void apply_override(json& j, const std::string& assignment) {
    const std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("config: override must look like section.key=value, got '" +
                          assignment + "'");
    const std::string dotted = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot - start);
        if (key.empty())
            throw ConfigError("config: empty key segment in '" + dotted + "'");
        if (dot == std::string::npos) {
            json parsed = json::parse(value, nullptr, false);
            (*node)[key] = parsed.is_discarded() ? json(value) : parsed;
            return;
        }
        node = &(*node)[key];
        if (!node->is_object() && !node->is_null())
            throw ConfigError("config: '" + dotted.substr(0, dot) +
                              "' is not a section");
        start = dot + 1;
    }
}

std::string config_hash(const json& j) {
    // FNV-1a over the canonical dump (nlohmann objects iterate sorted).
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace outpaint::config
