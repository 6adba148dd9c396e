#include "procwarm/trainer.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/hash.hpp"
#include "procwarm/loss.hpp"
#include "procwarm/optimizer.hpp"
#include "procwarm/rng.hpp"

#include <chrono>
#include <cmath>

namespace procwarm::train {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ValidationError("batch_size must be positive");
    if (total_steps < 0 || warmup_steps < 0) throw ValidationError("step counts must be nonnegative");
    if (schedule_horizon < 0) throw ValidationError("schedule_horizon must be nonnegative");
    if (schedule_horizon > 0 && schedule_horizon < total_steps) {
        throw ValidationError("schedule_horizon must not be shorter than total_steps");
    }
    if (epochs < 0 || warmup_epochs < 0) throw ValidationError("epoch counts must be nonnegative");
    if (peak_lr < 0.0) throw ValidationError("peak_lr must be nonnegative");
    if (weight_decay < 0.0) throw ValidationError("weight_decay must be nonnegative");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
        throw ValidationError("Adam betas must be in [0,1)");
    }
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
        throw ValidationError("label_smoothing must be in [0,1)");
    }
    if (checkpoint_every < 0 || eval_every < 0) throw ValidationError("cadences must be nonnegative");
    if (eval_every > 0 && eval_examples < 1) {
        throw ValidationError("eval_examples must be positive when evaluation is enabled");
    }
}

TrainConfig warmup_defaults() {
    TrainConfig cfg;
    cfg.stage = model::Stage::Warmup;
    cfg.batch_size = 256;
    cfg.total_steps = 15000;
    cfg.warmup_steps = 1000;
    cfg.peak_lr = 2e-3;
    cfg.weight_decay = 0.05;
    return cfg;
}

TrainConfig vision_defaults() {
    TrainConfig cfg;
    cfg.stage = model::Stage::Vision;
    cfg.batch_size = 512;
    cfg.epochs = 300;
    cfg.warmup_epochs = 50;
    cfg.peak_lr = 2e-3;
    cfg.weight_decay = 0.05;
    return cfg;
}

double lr_schedule(double peak, std::uint64_t step, std::uint64_t warmup, std::uint64_t total) {
    if (total == 0) return 0.0;
    if (warmup > 0 && step < warmup) {
        return peak * static_cast<double>(step) / static_cast<double>(warmup);
    }
    if (step >= total) return 0.0;
    const double progress =
        static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return peak * 0.5 * (1.0 + std::cos(3.141592653589793 * progress));
}

KvMap train_config_kv(const TrainConfig& cfg) {
    KvMap kv;
    kv["stage"] = model::to_string(cfg.stage);
    kv["batch_size"] = std::to_string(cfg.batch_size);
    kv["total_steps"] = std::to_string(cfg.total_steps);
    kv["warmup_steps"] = std::to_string(cfg.warmup_steps);
    kv["schedule_horizon"] = std::to_string(cfg.schedule_horizon);
    kv["epochs"] = std::to_string(cfg.epochs);
    kv["warmup_epochs"] = std::to_string(cfg.warmup_epochs);
    kv["peak_lr"] = format_double(cfg.peak_lr);
    kv["weight_decay"] = format_double(cfg.weight_decay);
    kv["beta1"] = format_double(cfg.beta1);
    kv["beta2"] = format_double(cfg.beta2);
    kv["label_smoothing"] = format_double(cfg.label_smoothing);
    kv["augment"] = cfg.augment ? "1" : "0";
    kv["seed"] = std::to_string(cfg.seed);
    kv["eval_every"] = std::to_string(cfg.eval_every);
    kv["eval_examples"] = std::to_string(cfg.eval_examples);
    kv["target_accuracy"] = format_double(cfg.target_accuracy);
    return kv;
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double grad_norm(const model::GradMap<float>& grads) {
    double sum = 0.0;
    for (const auto& [name, t] : grads) {
        for (float v : t.data) sum += static_cast<double>(v) * v;
    }
    return std::sqrt(sum);
}

[[noreturn]] void abort_non_finite(double loss, std::uint64_t step, double lr, double gnorm) {
    throw NumericError("non-finite loss " + format_double(loss) + " at step " +
                       std::to_string(step) + ", lr " + format_double(lr) +
                       ", last gradient norm " + format_double(gnorm));
}

struct EvalScore {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalScore evaluate_warmup(const model::Checkpoint& ckpt,
                          const std::vector<grammar::MaskedExample>& eval_set, int batch_size) {
    const int n = ckpt.config.seq_len;
    EvalScore score;
    std::size_t total_targets = 0;
    double loss_sum = 0.0;
    double hit_sum = 0.0;
    for (std::size_t off = 0; off < eval_set.size(); off += batch_size) {
        const int b = static_cast<int>(std::min<std::size_t>(batch_size, eval_set.size() - off));
        std::vector<std::uint16_t> ids;
        ids.reserve(static_cast<std::size_t>(b) * n);
        std::vector<std::vector<grammar::MaskTarget>> targets;
        std::size_t count = 0;
        for (int j = 0; j < b; ++j) {
            const grammar::MaskedExample& ex = eval_set[off + j];
            ids.insert(ids.end(), ex.input_tokens.begin(), ex.input_tokens.end());
            targets.push_back(ex.targets);
            count += ex.targets.size();
        }
        const auto logits = model::forward_tokens<float>(ckpt, ids, b);
        const auto res = masked_loss(logits, targets);
        loss_sum += static_cast<double>(res.loss) * static_cast<double>(count);
        hit_sum += res.accuracy * static_cast<double>(count);
        total_targets += count;
    }
    score.loss = loss_sum / static_cast<double>(total_targets);
    score.accuracy = hit_sum / static_cast<double>(total_targets);
    return score;
}

EvalScore evaluate_vision(const model::Checkpoint& ckpt, const data::ImageDataset& set,
                          int batch_size) {
    EvalScore score;
    const std::size_t elems = set.image_elems();
    double loss_sum = 0.0;
    double hit_sum = 0.0;
    for (std::size_t off = 0; off < set.count(); off += batch_size) {
        const int b = static_cast<int>(std::min<std::size_t>(batch_size, set.count() - off));
        model::Tensor<float> images({b, set.channels, set.height, set.width});
        std::copy_n(set.image(off), static_cast<std::size_t>(b) * elems, images.data.data());
        const std::vector<std::uint16_t> labels(set.labels.begin() + off,
                                                set.labels.begin() + off + b);
        const auto logits = model::forward_image<float>(ckpt, images);
        const auto res = class_loss(logits, labels);
        loss_sum += static_cast<double>(res.loss) * b;
        hit_sum += res.accuracy * b;
    }
    score.loss = loss_sum / static_cast<double>(set.count());
    score.accuracy = hit_sum / static_cast<double>(set.count());
    return score;
}

// Horizontal flip plus a random shift in [-4,4]^2 with zero fill, the
// pad-and-crop equivalent.
void augment_image(const float* src, int channels, int height, int width, CounterRng& rng,
                   float* dst) {
    const bool flip = rng.next_bool();
    const int ox = static_cast<int>(rng.next_below(9)) - 4;
    const int oy = static_cast<int>(rng.next_below(9)) - 4;
    for (int ch = 0; ch < channels; ++ch) {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                const int sx0 = flip ? width - 1 - x : x;
                const int sx = sx0 + ox;
                const int sy = y + oy;
                float v = 0.0f;
                if (sx >= 0 && sx < width && sy >= 0 && sy < height) {
                    v = src[(ch * height + sy) * width + sx];
                }
                dst[(ch * height + y) * width + x] = v;
            }
        }
    }
}

}  // namespace

TrainResult train_warmup(const model::Checkpoint& init, const grammar::GrammarSpec& spec,
                         double mask_ratio, corpus::Ablation ablation, const TrainConfig& cfg,
                         const CheckpointSink& sink) {
    cfg.validate();
    spec.validate();
    if (cfg.stage != model::Stage::Warmup) {
        throw ValidationError("train_warmup needs a warmup-stage config");
    }
    if (init.stage != model::Stage::Warmup) {
        throw ValidationError("train_warmup requires a warmup-stage checkpoint");
    }
    if (!init.is_frozen("token_embedding") || !init.is_frozen("pos_embedding")) {
        throw ValidationError("warm-up requires frozen token and positional tables");
    }
    if (init.config.seq_len != spec.seq_len) {
        throw ValidationError("checkpoint seq_len does not match the grammar");
    }
    if (init.config.vocab_size_with_mask != spec.vocab_size + 1) {
        throw ValidationError("checkpoint vocabulary does not match the grammar");
    }

    TrainResult res;
    res.checkpoint = init;
    res.metrics.run_id = "warmup-seed" + std::to_string(cfg.seed);
    KvMap hash_kv = train_config_kv(cfg);
    hash_kv["grammar.language"] = grammar::to_string(spec.language);
    hash_kv["grammar.k"] = std::to_string(spec.k);
    hash_kv["grammar.vocab_size"] = std::to_string(spec.vocab_size);
    hash_kv["grammar.p_open"] = format_double(spec.p_open);
    hash_kv["grammar.seq_len"] = std::to_string(spec.seq_len);
    hash_kv["mask_ratio"] = format_double(mask_ratio);
    hash_kv["ablation"] = corpus::to_string(ablation);
    res.metrics.config_hash = hex64(fnv1a64(kv_serialize(hash_kv)));
    res.metrics.meta["objective"] = "masked-token";
    res.metrics.meta["ablation"] = corpus::to_string(ablation);

    std::vector<grammar::MaskedExample> eval_set;
    if (cfg.eval_every > 0) {
        const std::uint64_t eval_seed = derive_key(cfg.seed, Stream::Eval, 0);
        eval_set.reserve(static_cast<std::size_t>(cfg.eval_examples));
        for (int i = 0; i < cfg.eval_examples; ++i) {
            eval_set.push_back(corpus::make_example(spec, eval_seed, i, mask_ratio, ablation));
        }
    }

    AdamWConfig ocfg;
    ocfg.beta1 = cfg.beta1;
    ocfg.beta2 = cfg.beta2;
    ocfg.weight_decay = cfg.weight_decay;
    AdamWState<float> opt;

    const int n = spec.seq_len;
    const std::uint64_t horizon = static_cast<std::uint64_t>(
        cfg.schedule_horizon > 0 ? cfg.schedule_horizon : cfg.total_steps);
    double last_gnorm = 0.0;
    std::uint64_t consumed = 0;
    for (int s = 0; s < cfg.total_steps; ++s) {
        const auto t0 = Clock::now();
        const double lr = lr_schedule(cfg.peak_lr, s, cfg.warmup_steps, horizon);

        std::vector<std::uint16_t> ids;
        ids.reserve(static_cast<std::size_t>(cfg.batch_size) * n);
        std::vector<std::vector<grammar::MaskTarget>> targets;
        targets.reserve(cfg.batch_size);
        for (int j = 0; j < cfg.batch_size; ++j) {
            grammar::MaskedExample ex =
                corpus::make_example(spec, cfg.seed, consumed++, mask_ratio, ablation);
            ids.insert(ids.end(), ex.input_tokens.begin(), ex.input_tokens.end());
            targets.push_back(std::move(ex.targets));
        }

        model::ForwardCache<float> cache;
        const auto logits = model::forward_tokens<float>(res.checkpoint, ids, cfg.batch_size, &cache);
        const auto lres = masked_loss(logits, targets);
        if (!std::isfinite(lres.loss)) abort_non_finite(lres.loss, s + 1, lr, last_gnorm);
        const auto grads = model::backward_tokens(res.checkpoint, ids, cache, lres.dlogits);
        last_gnorm = grad_norm(grads);
        ocfg.lr = lr;
        adamw_step(res.checkpoint, grads, opt, ocfg);
        res.checkpoint.step = static_cast<std::uint64_t>(s) + 1;

        const double wall = cfg.reference_mode ? 0.0 : elapsed_ms(t0);
        res.metrics.records.push_back({static_cast<std::uint64_t>(s) + 1, "train", lr,
                                       static_cast<double>(lres.loss), lres.accuracy, wall});
        if (sink && cfg.checkpoint_every > 0 && (s + 1) % cfg.checkpoint_every == 0) {
            sink(res.checkpoint, static_cast<std::uint64_t>(s) + 1);
        }
        if (cfg.eval_every > 0 && ((s + 1) % cfg.eval_every == 0 || s + 1 == cfg.total_steps)) {
            const EvalScore ev = evaluate_warmup(res.checkpoint, eval_set, cfg.batch_size);
            res.metrics.records.push_back(
                {static_cast<std::uint64_t>(s) + 1, "eval", lr, ev.loss, ev.accuracy, 0.0});
            if (cfg.target_accuracy > 0.0 && ev.accuracy >= cfg.target_accuracy) break;
        }
    }
    return res;
}

TrainResult train_vision(const model::Checkpoint& init, const data::ImageDataset& train_set,
                         const data::ImageDataset& test_set, const TrainConfig& cfg,
                         const CheckpointSink& sink) {
    cfg.validate();
    if (cfg.stage != model::Stage::Vision) {
        throw ValidationError("train_vision needs a vision-stage config");
    }
    if (init.stage != model::Stage::Vision) {
        throw ValidationError("train_vision requires a vision-stage checkpoint; run surgery "
                              "(reset-embeddings-and-head + stage retag) on warm-up output first");
    }
    if (!init.frozen.empty()) {
        throw ValidationError("vision stage trains every tensor; frozen flags must be cleared");
    }
    train_set.validate();
    test_set.validate();
    for (const data::ImageDataset* set : {&train_set, &test_set}) {
        if (set->channels != init.config.image_channels || set->height != init.config.image_size ||
            set->width != init.config.image_size) {
            throw ValidationError("dataset " + set->name + " does not match the model's image shape");
        }
        if (set->num_classes != init.config.num_classes) {
            throw ValidationError("dataset " + set->name + " class count does not match the model");
        }
    }
    if (train_set.count() == 0) throw ValidationError("empty training set");

    const std::size_t n = train_set.count();
    const std::uint64_t steps_per_epoch =
        (n + static_cast<std::size_t>(cfg.batch_size) - 1) / cfg.batch_size;
    const std::uint64_t total_steps = steps_per_epoch * cfg.epochs;
    const std::uint64_t ramp_steps = steps_per_epoch * cfg.warmup_epochs;

    TrainResult res;
    res.checkpoint = init;
    res.metrics.run_id = "vision-seed" + std::to_string(cfg.seed);
    KvMap hash_kv = train_config_kv(cfg);
    hash_kv["dataset"] = train_set.name;
    hash_kv["dataset.count"] = std::to_string(n);
    res.metrics.config_hash = hex64(fnv1a64(kv_serialize(hash_kv)));
    res.metrics.meta["objective"] = "classification";
    res.metrics.meta["augmentation"] =
        cfg.augment ? "random horizontal flip + pad-4 random crop (simplified policy)" : "none";

    AdamWConfig ocfg;
    ocfg.beta1 = cfg.beta1;
    ocfg.beta2 = cfg.beta2;
    ocfg.weight_decay = cfg.weight_decay;
    AdamWState<float> opt;

    const std::size_t elems = train_set.image_elems();
    std::vector<std::size_t> order(n);
    double last_gnorm = 0.0;
    std::uint64_t gstep = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        CounterRng shuffle_rng(derive_key(cfg.seed, Stream::Batch, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);
        }

        for (std::size_t off = 0; off < n; off += cfg.batch_size) {
            const auto t0 = Clock::now();
            const int b = static_cast<int>(std::min<std::size_t>(cfg.batch_size, n - off));
            model::Tensor<float> images({b, train_set.channels, train_set.height, train_set.width});
            std::vector<std::uint16_t> labels(static_cast<std::size_t>(b));
            for (int j = 0; j < b; ++j) {
                const std::size_t idx = order[off + j];
                labels[static_cast<std::size_t>(j)] = train_set.labels[idx];
                float* dst = images.data.data() + static_cast<std::size_t>(j) * elems;
                if (cfg.augment) {
                    CounterRng aug_rng(derive_key(cfg.seed, Stream::Augment,
                                                  static_cast<std::uint64_t>(epoch) * n + idx));
                    augment_image(train_set.image(idx), train_set.channels, train_set.height,
                                  train_set.width, aug_rng, dst);
                } else {
                    std::copy_n(train_set.image(idx), elems, dst);
                }
            }

            const double lr = lr_schedule(cfg.peak_lr, gstep, ramp_steps, total_steps);
            model::ForwardCache<float> cache;
            const auto logits = model::forward_image<float>(res.checkpoint, images, &cache);
            const auto lres = class_loss(logits, labels, cfg.label_smoothing);
            if (!std::isfinite(lres.loss)) abort_non_finite(lres.loss, gstep + 1, lr, last_gnorm);
            const auto grads = model::backward_image(res.checkpoint, cache, lres.dlogits);
            last_gnorm = grad_norm(grads);
            ocfg.lr = lr;
            adamw_step(res.checkpoint, grads, opt, ocfg);
            ++gstep;
            res.checkpoint.step = gstep;

            const double wall = cfg.reference_mode ? 0.0 : elapsed_ms(t0);
            res.metrics.records.push_back(
                {gstep, "train", lr, static_cast<double>(lres.loss), lres.accuracy, wall});
            if (sink && cfg.checkpoint_every > 0 && gstep % cfg.checkpoint_every == 0) {
                sink(res.checkpoint, gstep);
            }
        }

        const EvalScore ev = evaluate_vision(res.checkpoint, test_set, cfg.batch_size);
        res.metrics.records.push_back({gstep, "eval", lr_schedule(cfg.peak_lr, gstep, ramp_steps,
                                                                  total_steps),
                                       ev.loss, ev.accuracy, 0.0});
    }
    return res;
}

}  // namespace procwarm::train
