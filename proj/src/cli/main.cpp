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

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "outpaint/config.hpp"
#include "outpaint/core/errors.hpp"
#include "outpaint/datapipe.hpp"
#include "outpaint/evaluation.hpp"
#include "outpaint/masking.hpp"
#include "outpaint/panorama.hpp"
#include "outpaint/trainer.hpp"

namespace fs = std::filesystem;
using namespace outpaint;

namespace {

// ---------------------------------------------------------------------- util

struct CommonArgs {
    std::string config_file;
    std::vector<std::string> overrides;
    std::string out_dir;  // explicit run directory; empty = hash + timestamp
};

// Resolves the effective configuration: file (when given), then overrides in
// order, then the strict parse that rejects unknown keys.
config::RunConfig resolve_config(const CommonArgs& args, nlohmann::json* out_json) {
    nlohmann::json j = nlohmann::json::object();
    if (!args.config_file.empty()) {
        std::ifstream in(args.config_file, std::ios::binary);
        if (!in) throw DataError("config: cannot open " + args.config_file);
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config: " + args.config_file + ": " + e.what());
        }
    }
    for (const std::string& o : args.overrides) config::apply_override(j, o);
    config::RunConfig cfg = config::run_config_from_json(j);
    cfg.validate();
    if (out_json) *out_json = config::to_json(cfg);
    return cfg;
}

std::string timestamp_utc() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d%02d%02d-%02d%02d%02d",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec);
    return buf;
}

// Creates the run directory (config hash + timestamp unless overridden) and
// drops the effective config snapshot inside it.
fs::path make_run_dir(const CommonArgs& args, const nlohmann::json& cfg_json) {
    fs::path dir = args.out_dir.empty()
                       ? fs::path("runs") /
                             (config::config_hash(cfg_json) + "-" + timestamp_utc())
                       : fs::path(args.out_dir);
    fs::create_directories(dir);
    std::ofstream snap(dir / "config.json", std::ios::binary);
    if (!snap) throw DataError("cannot write " + (dir / "config.json").string());
    snap << cfg_json.dump(2) << "\n";
    return dir;
}

std::unique_ptr<conditioning::EmbeddingProvider> make_provider(
    const config::EvaluationConfig& e) {
    if (e.provider == "stub")
        return std::make_unique<conditioning::StubProvider>(e.embed_dim,
                                                            e.provider_seed);
    return std::make_unique<conditioning::PretrainedLogitsProvider>(
        e.classifier_weights, e.embed_dim);
}

bool stabilizer_wants_provider(const losses::LossWeights& w) {
    return w.stabilizer == losses::Stabilizer::Perceptual ||
           w.stabilizer == losses::Stabilizer::Combo;
}

std::vector<train::TrainExample> load_split(const config::RunConfig& cfg,
                                            const std::string& manifest_path) {
    const data::DatasetManifest m = data::load_manifest(manifest_path);
    return data::load_dataset(m, cfg.data.on_corrupt_policy(), &std::cerr);
}

// Deterministic inference mask sized to the image: the configured geometry
// with jitter pinned to zero.
masking::Mask inference_mask(masking::MaskSpec spec, int h, int w) {
    spec.jitter_px = 0;
    masking::validate(spec);
    return masking::build_mask(spec, h, w);
}

// Masks, runs the generator, composites; known pixels pass through bitwise.
TensorF outpaint_image(nn::Generator<float>& g, const TensorF& x,
                       const masking::Mask& m) {
    const TensorF z = masking::apply_mask(x, m);
    const TensorF out = g.forward(z, m, /*training=*/false);
    return masking::composite(out, z, m);
}

// ---------------------------------------------------------------- commands

int cmd_prepare_data(const CommonArgs& common) {
    const config::RunConfig cfg = resolve_config(common, nullptr);
    if (cfg.data.synthetic) {
        data::make_synthetic_dataset(cfg.data.root, cfg.data.synthetic_per_class,
                                     cfg.data.target_h, cfg.data.target_w,
                                     cfg.training.seed);
        std::cout << "synthetic dataset at " << cfg.data.root << "\n";
    }
    data::ManifestOptions opt;
    opt.class_whitelist = cfg.data.class_whitelist;
    opt.top_k = cfg.data.top_k;
    opt.holdout_per_class = cfg.data.holdout_per_class;
    opt.seed = cfg.training.seed;
    opt.target_h = cfg.data.target_h;
    opt.target_w = cfg.data.target_w;
    const auto [tr, ev] = data::build_manifest(cfg.data.root, opt);
    data::save_manifest(cfg.data.train_manifest, tr);
    data::save_manifest(cfg.data.eval_manifest, ev);
    std::cout << "train " << tr.records.size() << " images -> "
              << cfg.data.train_manifest << "\n"
              << "eval " << ev.records.size() << " images -> "
              << cfg.data.eval_manifest << "\n";
    return 0;
}

int cmd_precompute(const CommonArgs& common) {
    const config::RunConfig cfg = resolve_config(common, nullptr);
    const auto dataset = load_split(cfg, cfg.data.train_manifest);
    const auto provider = make_provider(cfg.evaluation);

    const auto loader = [&](int i) {
        return dataset[static_cast<std::size_t>(i)].image;
    };
    const auto stats = conditioning::fit_stats(
        *provider, static_cast<int>(dataset.size()), loader);

    std::vector<std::string> ids;
    ids.reserve(dataset.size());
    for (const auto& ex : dataset) ids.push_back(ex.id);
    conditioning::EmbeddingCache cache;
    const int degenerate =
        conditioning::precompute_cache(*provider, stats, ids, loader, cache);
    cache.save(cfg.evaluation.cache_file);
    stats.save(cfg.evaluation.stats_file);
    std::cout << "cached " << cache.size() << " embeddings dim "
              << provider->dim() << " (" << degenerate << " degenerate) -> "
              << cfg.evaluation.cache_file << "\n"
              << "stats -> " << cfg.evaluation.stats_file << "\n";
    return 0;
}

int cmd_train(const CommonArgs& common, const std::string& resume_from) {
    nlohmann::json cfg_json;
    const config::RunConfig cfg = resolve_config(common, &cfg_json);
    const auto dataset = load_split(cfg, cfg.data.train_manifest);

    const bool wants_cond =
        cfg.discriminator.use_conditioning && !cfg.training.no_cond;
    conditioning::EmbeddingCache cache;
    if (wants_cond) {
        try {
            cache = conditioning::EmbeddingCache::load(cfg.evaluation.cache_file);
        } catch (const DataError& e) {
            throw DataError(std::string(e.what()) +
                            " (run the precompute command first)");
        }
    }

    std::unique_ptr<conditioning::EmbeddingProvider> provider;
    if (stabilizer_wants_provider(cfg.losses))
        provider = make_provider(cfg.evaluation);

    const fs::path run_dir = make_run_dir(common, cfg_json);
    std::ofstream metrics(run_dir / "metrics.log",
                          std::ios::binary | std::ios::app);
    if (!metrics) throw DataError("cannot write " + (run_dir / "metrics.log").string());

    train::StepMetrics last{};
    if (resume_from.empty()) {
        train::Trainer trainer(cfg.generator, cfg.discriminator, cfg.training,
                               cfg.losses, provider.get());
        last = trainer.train(dataset, wants_cond ? &cache : nullptr, &metrics,
                             run_dir.string());
    } else {
        train::Trainer trainer =
            train::Trainer::load_checkpoint(resume_from, provider.get());
        trainer.set_total_steps(cfg.training.steps);
        last = trainer.train(dataset, wants_cond ? &cache : nullptr, &metrics,
                             run_dir.string());
    }
    std::cout << "trained to step " << last.step << " l_rec=" << last.l_rec
              << " l_total=" << last.l_total << "\n"
              << "run dir " << run_dir.string() << "\n";
    return 0;
}

int cmd_extend(const CommonArgs& common, const std::string& checkpoint,
               const std::string& input, const std::string& output,
               bool frames) {
    nlohmann::json cfg_json;
    const config::RunConfig cfg = resolve_config(common, &cfg_json);
    std::unique_ptr<conditioning::EmbeddingProvider> provider;
    if (stabilizer_wants_provider(cfg.losses))
        provider = make_provider(cfg.evaluation);
    train::Trainer trainer =
        train::Trainer::load_checkpoint(checkpoint, provider.get());
    nn::Generator<float>& g = trainer.generator();

    const fs::path run_dir = make_run_dir(common, cfg_json);
    const auto process = [&](const fs::path& in_path, const fs::path& out_path) {
        const TensorF x = data::to_tensor(data::read_image(in_path.string()));
        const masking::Mask m = inference_mask(
            cfg.training.mask_spec, static_cast<int>(x.dim(1)),
            static_cast<int>(x.dim(2)));
        data::write_image(out_path.string(),
                          data::from_tensor(outpaint_image(g, x, m)));
        std::cout << in_path.string() << " -> " << out_path.string() << "\n";
    };

    if (!frames) {
        const fs::path out = output.empty()
                                 ? run_dir / "extended.png"
                                 : fs::path(output);
        process(input, out);
        return 0;
    }

    // Frame mode: every image in the directory, each extended independently.
    if (!fs::is_directory(input))
        throw DataError("extend --frames: " + input + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("extend --frames: no files in " + input);
    const fs::path out_base = output.empty() ? run_dir / "frames" : fs::path(output);
    fs::create_directories(out_base);
    for (const fs::path& f : files)
        process(f, out_base / (f.stem().string() + ".png"));
    return 0;
}

int cmd_panorama(const CommonArgs& common, const std::string& checkpoint,
                 const std::string& seed_image, const std::string& output,
                 bool dump_steps) {
    nlohmann::json cfg_json;
    const config::RunConfig cfg = resolve_config(common, &cfg_json);
    std::unique_ptr<conditioning::EmbeddingProvider> provider;
    if (stabilizer_wants_provider(cfg.losses))
        provider = make_provider(cfg.evaluation);
    train::Trainer trainer =
        train::Trainer::load_checkpoint(checkpoint, provider.get());

    const fs::path run_dir = make_run_dir(common, cfg_json);
    const TensorF seed = data::to_tensor(data::read_image(seed_image));

    const auto on_step = [&](int k, const TensorF& strip) {
        if (!dump_steps) return;
        char name[32];
        std::snprintf(name, sizeof(name), "step_%02d.png", k);
        data::write_image((run_dir / name).string(), data::from_tensor(strip));
    };
    const TensorF strip =
        panorama::generate_panorama(trainer.generator(), seed, cfg.panorama, on_step);

    const fs::path out = output.empty() ? run_dir / "panorama.png" : fs::path(output);
    data::write_image(out.string(), data::from_tensor(strip));
    std::cout << "panorama " << strip.dim(2) << " columns -> " << out.string()
              << "\n";
    return 0;
}

int cmd_evaluate(const CommonArgs& common, const std::string& checkpoint,
                 bool self_check) {
    nlohmann::json cfg_json;
    const config::RunConfig cfg = resolve_config(common, &cfg_json);
    const auto eval_set = load_split(cfg, cfg.data.eval_manifest);
    const auto provider = make_provider(cfg.evaluation);
    const fs::path run_dir = make_run_dir(common, cfg_json);

    evaluation::EvalReport report;
    if (self_check) {
        // Ground truth scored against itself: the metric fixed point.
        if (eval_set.empty()) throw DataError("evaluate: empty evaluation set");
        std::vector<TensorF> outputs;
        outputs.reserve(eval_set.size());
        for (const auto& ex : eval_set) outputs.push_back(ex.image);
        const masking::Mask m = inference_mask(
            cfg.training.mask_spec, static_cast<int>(eval_set[0].image.dim(1)),
            static_cast<int>(eval_set[0].image.dim(2)));
        report = evaluation::evaluate_pairs(eval_set, outputs, m, *provider);
    } else {
        if (checkpoint.empty())
            throw ConfigError("evaluate: --checkpoint is required (or use --self)");
        std::unique_ptr<conditioning::EmbeddingProvider> stab;
        if (stabilizer_wants_provider(cfg.losses)) stab = make_provider(cfg.evaluation);
        train::Trainer trainer =
            train::Trainer::load_checkpoint(checkpoint, stab.get());
        report = evaluation::evaluate_model(trainer.generator(), eval_set,
                                            cfg.training.mask_spec, *provider);
    }

    std::ofstream rep(run_dir / "report.txt", std::ios::binary);
    if (!rep) throw DataError("cannot write " + (run_dir / "report.txt").string());
    evaluation::write_report(rep, report);
    evaluation::write_report(std::cout, report);
    std::cout << "report -> " << (run_dir / "report.txt").string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"outpaint: adversarial image extension toolkit"};
    app.require_subcommand(1);

    CommonArgs common;
    app.add_option("--config", common.config_file,
                   "JSON configuration file (defaults used when omitted)");
    app.add_option("--set", common.overrides,
                   "override a config key: section.key=value (repeatable)");
    app.add_option("--out", common.out_dir,
                   "run directory (default: runs/<config-hash>-<timestamp>)");

    const std::string footer =
        "Configuration keys and their defaults:\n" +
        config::to_json(config::RunConfig{}).dump(2);
    app.footer(footer);

    auto* prepare = app.add_subcommand(
        "prepare-data", "Build train/eval manifests (and the synthetic dataset)");
    auto* precompute = app.add_subcommand(
        "precompute", "Embed the training images into the conditioning cache");
    auto* train_cmd = app.add_subcommand("train", "Run adversarial training");
    std::string resume_from;
    train_cmd->add_option("--resume", resume_from, "checkpoint to continue from");

    auto* extend = app.add_subcommand("extend", "Outpaint one image (or a directory)");
    std::string ext_checkpoint, ext_input, ext_output;
    bool ext_frames = false;
    extend->add_option("--checkpoint", ext_checkpoint, "trained checkpoint")->required();
    extend->add_option("--input", ext_input, "input image (or directory with --frames)")
        ->required();
    extend->add_option("--output", ext_output, "output path (default: run dir)");
    extend->add_flag("--frames", ext_frames,
                     "treat --input as a directory; extend each file independently");

    auto* pano = app.add_subcommand("panorama", "Recursively extend a seed image");
    std::string pano_checkpoint, pano_seed, pano_output;
    bool pano_dump = false;
    pano->add_option("--checkpoint", pano_checkpoint, "trained checkpoint")->required();
    pano->add_option("--seed-image", pano_seed, "seed image sized to the panorama window")
        ->required();
    pano->add_option("--output", pano_output, "output path (default: run dir)");
    pano->add_flag("--dump-steps", pano_dump, "write each intermediate strip");

    auto* eval_cmd = app.add_subcommand("evaluate", "Score a checkpoint on the eval split");
    std::string eval_checkpoint;
    bool eval_self = false;
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained checkpoint");
    eval_cmd->add_flag("--self", eval_self,
                       "score ground truth against itself (pipeline self-check)");

    for (auto* sub : {prepare, precompute, train_cmd, extend, pano, eval_cmd}) {
        sub->footer(footer);
        sub->fallthrough();  // --config/--set/--out may follow the subcommand
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;  // malformed invocations are config errors
    }

    try {
        if (prepare->parsed()) return cmd_prepare_data(common);
        if (precompute->parsed()) return cmd_precompute(common);
        if (train_cmd->parsed()) return cmd_train(common, resume_from);
        if (extend->parsed())
            return cmd_extend(common, ext_checkpoint, ext_input, ext_output, ext_frames);
        if (pano->parsed())
            return cmd_panorama(common, pano_checkpoint, pano_seed, pano_output, pano_dump);
        if (eval_cmd->parsed()) return cmd_evaluate(common, eval_checkpoint, eval_self);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ShapeError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
