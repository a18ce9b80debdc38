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

#include "outpaint/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <ostream>
#include <utility>

#include "outpaint/config.hpp"
#include "outpaint/core/binio.hpp"
#include "outpaint/core/errors.hpp"

namespace outpaint::train {

namespace {

constexpr char kCheckpointMagic[4] = {'O', 'P', 'C', 'K'};
constexpr std::uint32_t kCheckpointVersion = 1;

std::string format_metrics(const StepMetrics& m) {
    char buf[640];
    std::snprintf(buf, sizeof buf,
                  "step=%lld l_rec=%.17g l_adv_d=%.17g l_adv_g=%.17g "
                  "d_real_mean=%.17g d_fake_mean=%.17g l_perc=%.17g l_fm=%.17g "
                  "l_total=%.17g",
                  static_cast<long long>(m.step), m.l_rec, m.l_adv_d, m.l_adv_g,
                  m.d_real_mean, m.d_fake_mean, m.l_perc, m.l_fm, m.l_total);
    return buf;
}

// The discriminator must only ever see composites: every known pixel has to
// match the real image bit for bit.
void verify_composite(const TensorF& comp, const TensorF& x, const masking::Mask& m) {
    const std::int64_t hw = static_cast<std::int64_t>(m.dim(0)) * m.dim(1);
    for (int ch = 0; ch < 3; ++ch) {
        const float* a = comp.data() + ch * hw;
        const float* b = x.data() + ch * hw;
        for (std::int64_t i = 0; i < hw; ++i)
            if (m[i] == 0.0f && a[i] != b[i])
                throw Error("trainer: composite altered a known pixel; the "
                            "discriminator would score raw generator output");
    }
}

void put_named_tensor(std::ostream& out, const std::string& name, const TensorF& t) {
    binio::put_string(out, name);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d)
        binio::put<std::int64_t>(out, t.dim(d));
    binio::put_array(out, t.data(), static_cast<std::size_t>(t.size()));
}

// Reads one named tensor and stores it into `dst`, which must already have
// the expected name and shape (the architecture comes from the config
// snapshot, so any disagreement means a corrupt or foreign file).
void get_named_tensor_into(std::istream& in, const std::string& want_name, TensorF& dst) {
    const std::string name = binio::get_string(in, "tensor name");
    if (name != want_name)
        throw DataError("checkpoint: expected tensor '" + want_name + "', found '" +
                        name + "'");
    const auto rank = binio::get<std::uint32_t>(in, "tensor rank");
    if (static_cast<int>(rank) != dst.rank())
        throw DataError("checkpoint: tensor '" + name + "' has wrong rank");
    for (int d = 0; d < dst.rank(); ++d) {
        const auto extent = binio::get<std::int64_t>(in, "tensor extent");
        if (extent != dst.dim(d))
            throw DataError("checkpoint: tensor '" + name + "' has wrong shape");
    }
    binio::get_array(in, dst.data(), static_cast<std::size_t>(dst.size()),
                     "tensor data");
}

void put_params(std::ostream& out, const std::vector<nn::ParamEntry<float>>& params) {
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) put_named_tensor(out, p.name, *p.value);
}

void get_params(std::istream& in, const std::vector<nn::ParamEntry<float>>& params) {
    const auto n = binio::get<std::uint32_t>(in, "parameter count");
    if (n != params.size())
        throw DataError("checkpoint: parameter count mismatch");
    for (const auto& p : params) get_named_tensor_into(in, p.name, *p.value);
}

void put_optimizer(std::ostream& out, const nn::AdamOptimizer<float>& opt) {
    binio::put<std::int64_t>(out, opt.t());
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(opt.slots().size()));
    for (const auto& s : opt.slots()) {
        put_named_tensor(out, s.name + ".m", s.m);
        put_named_tensor(out, s.name + ".v", s.v);
    }
}

void get_optimizer(std::istream& in, nn::AdamOptimizer<float>& opt) {
    opt.set_t(binio::get<std::int64_t>(in, "optimizer step count"));
    const auto n = binio::get<std::uint32_t>(in, "optimizer slot count");
    if (n != opt.slots().size())
        throw DataError("checkpoint: optimizer slot count mismatch");
    for (auto& s : opt.slots()) {
        get_named_tensor_into(in, s.name + ".m", s.m);
        get_named_tensor_into(in, s.name + ".v", s.v);
    }
}

// Ablation flags act on the network configs exactly once, at construction.
nn::GeneratorConfig ablated(nn::GeneratorConfig g, const TrainingConfig& t) {
    if (t.no_skip) g.use_skips = false;
    if (t.no_instance_norm) g.use_instance_norm = false;
    return g;
}

nn::DiscriminatorConfig ablated(nn::DiscriminatorConfig d, const TrainingConfig& t) {
    if (t.no_cond) d.use_conditioning = false;
    return d;
}

// k-th draw of a boot stream over the master seed, so the generator, the
// discriminator, and the mask/shuffle stream get independent seeds.
std::uint64_t derive_seed(std::uint64_t seed, int k) {
    Rng boot(seed);
    std::uint64_t v = 0;
    for (int i = 0; i <= k; ++i) v = boot.next_u64();
    return v;
}

}  // namespace

void TrainingConfig::validate() const {
    if (g_lr < 0 || d_lr < 0)
        throw ConfigError("trainer: learning rates must not be negative");
    if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
        throw ConfigError("trainer: adam betas must lie in [0, 1)");
    if (!(adam_eps > 0)) throw ConfigError("trainer: adam_eps must be > 0");
    if (batch_size < 1) throw ConfigError("trainer: batch_size must be >= 1");
    if (steps < 0) throw ConfigError("trainer: steps must be >= 0");
    if (checkpoint_every < 0)
        throw ConfigError("trainer: checkpoint_every must be >= 0");
    masking::validate(mask_spec);
}

Trainer::Trainer(nn::GeneratorConfig g_cfg, nn::DiscriminatorConfig d_cfg,
                 TrainingConfig t_cfg, losses::LossWeights weights,
                 const conditioning::EmbeddingProvider* perceptual_provider)
    : g_cfg_(ablated(std::move(g_cfg), t_cfg)),
      d_cfg_(ablated(std::move(d_cfg), t_cfg)),
      cfg_(std::move(t_cfg)),
      weights_(weights),
      perc_provider_(perceptual_provider),
      g_(g_cfg_, derive_seed(cfg_.seed, 0)),
      d_(d_cfg_, derive_seed(cfg_.seed, 1)),
      g_opt_(cfg_.beta1, cfg_.beta2, cfg_.adam_eps),
      d_opt_(cfg_.beta1, cfg_.beta2, cfg_.adam_eps),
      rng_(derive_seed(cfg_.seed, 2)) {
    g_opt_.attach(g_.params());
    d_opt_.attach(d_.params());
    const bool wants_perc = weights_.stabilizer == losses::Stabilizer::Perceptual ||
                            weights_.stabilizer == losses::Stabilizer::Combo;
    if (wants_perc && perc_provider_ == nullptr)
        throw ConfigError(
            "trainer: the perceptual stabilizer needs an embedding provider");
}

StepMetrics Trainer::train_step(const std::vector<const TrainExample*>& batch,
                                const conditioning::EmbeddingCache* cache) {
    const int B = static_cast<int>(batch.size());
    if (B < 1) throw ConfigError("trainer: empty batch");
    const int S = d_cfg_.input_size;
    for (const TrainExample* ex : batch) {
        if (ex->image.rank() != 3 || ex->image.dim(0) != 3 || ex->image.dim(1) != S ||
            ex->image.dim(2) != S)
            throw ShapeError("trainer: example '" + ex->id + "' is not (3, " +
                             std::to_string(S) + ", " + std::to_string(S) + ")");
    }

    // Resolve conditioning vectors before touching the RNG so a bad batch
    // cannot advance the mask stream.
    std::vector<const TensorF*> cond(static_cast<std::size_t>(B), nullptr);
    if (d_cfg_.use_conditioning) {
        if (cache == nullptr)
            throw ConfigError(
                "trainer: conditioning is enabled but no embedding cache was given");
        for (int i = 0; i < B; ++i)
            cond[static_cast<std::size_t>(i)] = &cache->lookup(batch[static_cast<std::size_t>(i)]->id);
    }

    // One fresh jittered mask per step, shared across the batch.
    const masking::Mask m = masking::build_mask(cfg_.mask_spec, S, S, rng_);
    last_mask_ = m;

    StepMetrics out;
    out.step = step_ + 1;

    // --- Discriminator update on the current generator. -------------------
    std::vector<TensorF> zs(static_cast<std::size_t>(B));
    std::vector<TensorF> comps(static_cast<std::size_t>(B));
    for (int i = 0; i < B; ++i) {
        const TensorF& x = batch[static_cast<std::size_t>(i)]->image;
        zs[static_cast<std::size_t>(i)] = masking::apply_mask(x, m);
        TensorF g_out = g_.forward(zs[static_cast<std::size_t>(i)], m, /*training=*/false);
        comps[static_cast<std::size_t>(i)] =
            masking::composite(g_out, zs[static_cast<std::size_t>(i)], m);
        verify_composite(comps[static_cast<std::size_t>(i)], x, m);
    }

    d_.advance_spectral_norm();  // one power-iteration step per training step
    d_.zero_grads();
    std::vector<float> s_real(static_cast<std::size_t>(B)), s_fake(static_cast<std::size_t>(B));
    const float inv_b = 1.0f / static_cast<float>(B);
    for (int i = 0; i < B; ++i) {
        const auto k = static_cast<std::size_t>(i);
        s_real[k] = d_.score(batch[k]->image, m, cond[k], /*training=*/true);
        if (1.0f - s_real[k] > 0.0f)
            d_.backward(-inv_b, /*want_dinput=*/false, /*accumulate_params=*/true);
    }
    for (int i = 0; i < B; ++i) {
        const auto k = static_cast<std::size_t>(i);
        s_fake[k] = d_.score(comps[k], m, cond[k], /*training=*/true);
        if (1.0f + s_fake[k] > 0.0f)
            d_.backward(inv_b, /*want_dinput=*/false, /*accumulate_params=*/true);
    }
    out.l_adv_d = losses::hinge_d_loss(s_real, s_fake);
    for (int i = 0; i < B; ++i) {
        const auto k = static_cast<std::size_t>(i);
        out.d_real_mean += s_real[k] / B;
        out.d_fake_mean += s_fake[k] / B;
    }
    if (!std::isfinite(out.l_adv_d) || !std::isfinite(out.d_real_mean) ||
        !std::isfinite(out.d_fake_mean))
        throw NumericError("trainer: non-finite discriminator loss: " +
                           format_metrics(out));
    d_opt_.step(d_.params(), cfg_.d_lr);

    // --- Generator update against the just-updated discriminator. ---------
    const bool use_fm = weights_.stabilizer == losses::Stabilizer::FeatureMatching ||
                        weights_.stabilizer == losses::Stabilizer::Combo;
    const bool use_perc = weights_.stabilizer == losses::Stabilizer::Perceptual ||
                          weights_.stabilizer == losses::Stabilizer::Combo;
    g_.zero_grads();
    const std::int64_t hw = static_cast<std::int64_t>(S) * S;
    for (int i = 0; i < B; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const TensorF& x = batch[k]->image;
        TensorF g_out = g_.forward(zs[k], m, /*training=*/true);
        TensorF comp = masking::composite(g_out, zs[k], m);

        out.l_rec += losses::recon_loss(x, g_out) / B;
        TensorF dg_out = losses::recon_loss_backward(x, g_out, inv_b);

        // Gradients that arrive through the composite only touch the
        // unknown region; known pixels come from z and carry nothing back.
        TensorF dcomp({3, S, S});
        if (use_fm) {
            auto r = losses::feature_matching_with_grad(
                d_, x, comp, m,
                static_cast<float>(weights_.feature_matching_weight) * inv_b);
            out.l_fm += r.value / B;
            TensorF di = d_.backward_feature_grads(r.dacts_fake, /*want_dinput=*/true,
                                                   /*accumulate_params=*/false);
            kernels::add(dcomp.data(), di.data(), dcomp.data(),
                         static_cast<std::size_t>(dcomp.size()));
        }
        const float s = d_.score(comp, m, cond[k], /*training=*/true);
        out.l_adv_g += -s / static_cast<double>(B);
        {
            TensorF di =
                d_.backward(-static_cast<float>(weights_.lambda_adv) * inv_b,
                            /*want_dinput=*/true, /*accumulate_params=*/false);
            kernels::add(dcomp.data(), di.data(), dcomp.data(),
                         static_cast<std::size_t>(dcomp.size()));
        }
        if (use_perc) {
            TensorF dp;
            out.l_perc += losses::perceptual_loss_with_grad(
                              *perc_provider_, x, comp,
                              static_cast<float>(weights_.perceptual_weight) * inv_b,
                              dp) /
                          B;
            kernels::add(dcomp.data(), dp.data(), dcomp.data(),
                         static_cast<std::size_t>(dcomp.size()));
        }
        for (int ch = 0; ch < 3; ++ch) {
            const float* src = dcomp.data() + ch * hw;
            float* dst = dg_out.data() + ch * hw;
            for (std::int64_t p = 0; p < hw; ++p)
                if (m[p] != 0.0f) dst[p] += src[p];
        }
        g_.backward(dg_out);
    }
    out.l_total = out.l_rec + weights_.lambda_adv * out.l_adv_g +
                  weights_.perceptual_weight * out.l_perc +
                  weights_.feature_matching_weight * out.l_fm;
    if (!std::isfinite(out.l_rec) || !std::isfinite(out.l_adv_g) ||
        !std::isfinite(out.l_total))
        throw NumericError("trainer: non-finite generator loss: " +
                           format_metrics(out));
    g_opt_.step(g_.params(), cfg_.g_lr);

    step_ = out.step;
    return out;
}

void Trainer::set_total_steps(int steps) {
    if (steps < step_)
        throw ConfigError("trainer: step budget below the current step");
    cfg_.steps = steps;
}

std::vector<int> Trainer::next_batch_indices(std::size_t dataset_size) {
    const auto b = static_cast<std::size_t>(cfg_.batch_size);
    if (b > dataset_size)
        throw ConfigError("trainer: batch_size exceeds the dataset size");
    if (perm_.size() != dataset_size || cursor_ + b > perm_.size()) {
        // Reshuffle; a partial epoch tail smaller than a batch is dropped.
        perm_.resize(dataset_size);
        std::iota(perm_.begin(), perm_.end(), 0);
        for (std::size_t i = dataset_size - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(
                rng_.uniform_int(0, static_cast<std::int64_t>(i)));
            std::swap(perm_[i], perm_[j]);
        }
        cursor_ = 0;
    }
    std::vector<int> idx(perm_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                         perm_.begin() + static_cast<std::ptrdiff_t>(cursor_ + b));
    cursor_ += b;
    return idx;
}

void Trainer::write_metrics_header(std::ostream& out, const TrainingConfig& cfg) {
    char buf[320];
    std::snprintf(buf, sizeof buf,
                  "# adam g_lr=%.17g d_lr=%.17g beta1=%.17g beta2=%.17g eps=%.17g "
                  "batch_size=%d",
                  cfg.g_lr, cfg.d_lr, cfg.beta1, cfg.beta2, cfg.adam_eps,
                  cfg.batch_size);
    out << buf << '\n';
}

void Trainer::write_metrics_record(std::ostream& out, const StepMetrics& m) {
    out << format_metrics(m) << '\n';
}

StepMetrics Trainer::train(const std::vector<TrainExample>& dataset,
                           const conditioning::EmbeddingCache* cache,
                           std::ostream* metrics_out,
                           const std::string& checkpoint_dir) {
    cfg_.validate();
    if (dataset.empty()) throw DataError("trainer: empty dataset");
    if (metrics_out && step_ == 0) write_metrics_header(*metrics_out, cfg_);

    StepMetrics last;
    last.step = step_;
    while (step_ < cfg_.steps) {
        const std::vector<int> idx = next_batch_indices(dataset.size());
        std::vector<const TrainExample*> batch;
        batch.reserve(idx.size());
        for (const int i : idx) batch.push_back(&dataset[static_cast<std::size_t>(i)]);
        last = train_step(batch, cache);
        if (metrics_out) {
            write_metrics_record(*metrics_out, last);
            metrics_out->flush();
        }
        if (!checkpoint_dir.empty() && cfg_.checkpoint_every > 0 &&
            step_ % cfg_.checkpoint_every == 0) {
            char name[64];
            std::snprintf(name, sizeof name, "/step_%08lld.ckpt",
                          static_cast<long long>(step_));
            save_checkpoint(checkpoint_dir + name);
        }
    }
    if (!checkpoint_dir.empty()) save_checkpoint(checkpoint_dir + "/final.ckpt");
    return last;
}

void Trainer::save_checkpoint(const std::string& path) {
    nlohmann::json cfg_json{{"generator", config::to_json(g_cfg_)},
                            {"discriminator", config::to_json(d_cfg_)},
                            {"training", config::to_json(cfg_)},
                            {"losses", config::to_json(weights_)}};
    const std::string cfg_text = cfg_json.dump();
    binio::atomic_write(path, [&](std::ostream& out) {
        binio::put_header(out, kCheckpointMagic, kCheckpointVersion);
        binio::put_string(out, cfg_text);
        binio::put<std::int64_t>(out, step_);
        put_params(out, g_.params());
        put_params(out, d_.params());
        put_optimizer(out, g_opt_);
        put_optimizer(out, d_opt_);
        const auto sn = d_.sn_state();
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(sn.size()));
        for (const auto& [name, tensor] : sn) put_named_tensor(out, name, *tensor);
        const auto state = rng_.state();
        binio::put_array(out, state.data(), state.size());
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(perm_.size()));
        binio::put_array(out, perm_.data(), perm_.size());
        binio::put<std::uint64_t>(out, static_cast<std::uint64_t>(cursor_));
    });
}

Trainer Trainer::load_checkpoint(
    const std::string& path,
    const conditioning::EmbeddingProvider* perceptual_provider) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    binio::check_header(in, kCheckpointMagic, kCheckpointVersion, "checkpoint");
    nlohmann::json cfg_json;
    try {
        cfg_json = nlohmann::json::parse(binio::get_string(in, "config snapshot"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: bad config snapshot: ") + e.what());
    }
    Trainer t(config::generator_from_json(cfg_json.at("generator")),
              config::discriminator_from_json(cfg_json.at("discriminator")),
              config::training_from_json(cfg_json.at("training")),
              config::loss_weights_from_json(cfg_json.at("losses")),
              perceptual_provider);
    t.step_ = binio::get<std::int64_t>(in, "step");
    get_params(in, t.g_.params());
    get_params(in, t.d_.params());
    get_optimizer(in, t.g_opt_);
    get_optimizer(in, t.d_opt_);
    const auto want_sn = t.d_.sn_state();
    const auto n_sn = binio::get<std::uint32_t>(in, "spectral-norm state count");
    if (n_sn != want_sn.size())
        throw DataError("checkpoint: spectral-norm state count mismatch");
    for (const auto& [name, tensor] : want_sn)
        get_named_tensor_into(in, name, *tensor);
    std::array<std::uint64_t, 4> state{};
    binio::get_array(in, state.data(), state.size(), "rng state");
    t.rng_.set_state(state);
    const auto n_perm = binio::get<std::uint32_t>(in, "permutation length");
    t.perm_.resize(n_perm);
    if (n_perm) binio::get_array(in, t.perm_.data(), n_perm, "permutation");
    t.cursor_ = static_cast<std::size_t>(binio::get<std::uint64_t>(in, "cursor"));
    if (in.peek() != std::char_traits<char>::eof())
        throw DataError("checkpoint: trailing bytes after payload");
    return t;
}

}  // namespace outpaint::train
