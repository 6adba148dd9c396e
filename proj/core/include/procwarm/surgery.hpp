#pragma once

#include "procwarm/param_store.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace procwarm::surgery {

enum class ShuffleScope { All, AttentionOnly, MlpOnly };
const char* to_string(ShuffleScope scope);
ShuffleScope shuffle_scope_from_string(const std::string& name);

enum class LayerRange { First, Middle, Final };
const char* to_string(LayerRange range);
LayerRange layer_range_from_string(const std::string& name);

// Half-open block interval for one third of `depth` blocks, split
// floor/floor/remainder (12 -> 4/4/4, 7 -> 2/2/3).
std::pair<int, int> layer_range_bounds(LayerRange range, int depth);

// Discards the warm-up input/output machinery (token table, positional
// table, masked head), installs freshly initialized vision adapters
// (patch embedding, class token, positional table sized patch_count+1,
// classification head) and clears all frozen flags. Block tensors are
// untouched bit-exactly. The stage tag is flipped by a separate retag
// step.
model::Checkpoint reset_embeddings_and_head(const model::Checkpoint& ckpt, std::uint64_t seed);

// Independently permutes the flattened values of every weight matrix in
// scope (All covers attention and MLP weights; biases and norm parameters
// are never shuffled). Out-of-scope tensors are bit-identical.
model::Checkpoint shuffle_weights(const model::Checkpoint& ckpt, ShuffleScope scope,
                                  std::uint64_t seed);

// Copies the donor's blocks in `range` into the target bit-exactly;
// everything else keeps the target's values. Configs must match.
model::Checkpoint transfer_layers(const model::Checkpoint& target, const model::Checkpoint& donor,
                                  LayerRange range);

// warmup -> vision only; requires the vision adapters to be present (run
// reset_embeddings_and_head first).
model::Checkpoint retag_stage(const model::Checkpoint& ckpt, model::Stage stage);

// Plan text, one step per line:
//   reset-embeddings-and-head <seed>
//   shuffle-weights <all|attention-only|mlp-only> <seed>
//   transfer-layers <first|middle|final> <donor checkpoint path>
//   retag-stage vision
struct PlanStep {
    enum class Kind { Reset, Shuffle, Transfer, Retag } kind = Kind::Reset;
    std::uint64_t seed = 0;
    ShuffleScope scope = ShuffleScope::All;
    LayerRange range = LayerRange::First;
    std::string donor_path;

    bool operator==(const PlanStep&) const = default;
};

struct SurgeryPlan {
    std::vector<PlanStep> steps;

    bool operator==(const SurgeryPlan&) const = default;
};

SurgeryPlan parse_plan(const std::string& text);
std::string plan_to_text(const SurgeryPlan& plan);

using DonorLoader = std::function<model::Checkpoint(const std::string& path)>;

// Applies the steps in order. Transfer steps fetch their donor through
// `donor_loader` (the CLI passes read_checkpoint).
model::Checkpoint apply_plan(const model::Checkpoint& input, const SurgeryPlan& plan,
                             const DonorLoader& donor_loader);

}  // namespace procwarm::surgery
