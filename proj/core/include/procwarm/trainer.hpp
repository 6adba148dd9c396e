#pragma once

#include "procwarm/corpus.hpp"
#include "procwarm/dataset.hpp"
#include "procwarm/metrics.hpp"
#include "procwarm/model.hpp"

#include <cstdint>
#include <functional>

namespace procwarm::train {

struct TrainConfig {
    model::Stage stage = model::Stage::Warmup;
    int batch_size = 256;
    int total_steps = 15000;   // warm-up stage
    int warmup_steps = 1000;   // linear ramp before cosine decay
    int schedule_horizon = 0;  // warm-up lr horizon in steps, 0 = total_steps
    int epochs = 300;          // vision stage
    int warmup_epochs = 50;    // vision ramp, converted to steps
    double peak_lr = 2e-3;
    double weight_decay = 0.05;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double label_smoothing = 0.0;  // vision only, default off
    bool augment = true;           // vision: random flip + shifted crop
    std::uint64_t seed = 0;
    int checkpoint_every = 0;   // steps between intermediate checkpoints, 0 = none
    int eval_every = 250;       // warm-up eval cadence in steps
    int eval_examples = 512;    // warm-up held-out example count
    double target_accuracy = 0.0;  // stop once eval accuracy reaches it, 0 disables
    bool reference_mode = false;   // record wall_ms as 0 for bit-exact metrics

    void validate() const;
};

// Appendix-style defaults for the two stages.
TrainConfig warmup_defaults();
TrainConfig vision_defaults();

// Linear warm-up to `peak` over `warmup` steps, then cosine decay to 0 at
// `total`. lr(0) = 0, lr(warmup) = peak, lr(total) = 0.
double lr_schedule(double peak, std::uint64_t step, std::uint64_t warmup, std::uint64_t total);

KvMap train_config_kv(const TrainConfig& cfg);

struct TrainResult {
    model::Checkpoint checkpoint;
    RunMetrics metrics;
};

// Invoked at the checkpoint cadence with the in-progress parameters.
using CheckpointSink = std::function<void(const model::Checkpoint&, std::uint64_t step)>;

// Masked-token warm-up on an endless stream of generated examples.
// Requires a warmup-stage checkpoint with frozen token and positional
// tables; they are bit-identical in the result. Aborts with NumericError
// (step, lr, gradient norm in the message) if the loss leaves the finite
// range.
TrainResult train_warmup(const model::Checkpoint& init, const grammar::GrammarSpec& spec,
                         double mask_ratio, corpus::Ablation ablation, const TrainConfig& cfg,
                         const CheckpointSink& sink = {});

// Supervised image classification; all tensors trainable. Evaluates the
// test split at the end of every epoch.
TrainResult train_vision(const model::Checkpoint& init, const data::ImageDataset& train_set,
                         const data::ImageDataset& test_set, const TrainConfig& cfg,
                         const CheckpointSink& sink = {});

}  // namespace procwarm::train
