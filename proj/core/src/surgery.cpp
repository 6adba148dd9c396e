#include "procwarm/surgery.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/model.hpp"
#include "procwarm/rng.hpp"

#include <sstream>

namespace procwarm::surgery {

const char* to_string(ShuffleScope scope) {
    switch (scope) {
        case ShuffleScope::All: return "all";
        case ShuffleScope::AttentionOnly: return "attention-only";
        default: return "mlp-only";
    }
}

ShuffleScope shuffle_scope_from_string(const std::string& name) {
    if (name == "all") return ShuffleScope::All;
    if (name == "attention-only" || name == "attention") return ShuffleScope::AttentionOnly;
    if (name == "mlp-only" || name == "mlp") return ShuffleScope::MlpOnly;
    throw ValidationError("unknown shuffle scope: " + name + " (expected all|attention-only|mlp-only)");
}

const char* to_string(LayerRange range) {
    switch (range) {
        case LayerRange::First: return "first";
        case LayerRange::Middle: return "middle";
        default: return "final";
    }
}

LayerRange layer_range_from_string(const std::string& name) {
    if (name == "first") return LayerRange::First;
    if (name == "middle") return LayerRange::Middle;
    if (name == "final" || name == "last") return LayerRange::Final;
    throw ValidationError("unknown layer range: " + name + " (expected first|middle|final)");
}

std::pair<int, int> layer_range_bounds(LayerRange range, int depth) {
    if (depth < 1) throw ValidationError("layer ranges need at least one block");
    const int third = depth / 3;
    switch (range) {
        case LayerRange::First: return {0, third};
        case LayerRange::Middle: return {third, 2 * third};
        default: return {2 * third, depth};
    }
}

model::Checkpoint reset_embeddings_and_head(const model::Checkpoint& ckpt, std::uint64_t seed) {
    if (ckpt.stage != model::Stage::Warmup) {
        throw ValidationError("reset_embeddings_and_head requires a warmup-stage checkpoint");
    }
    model::Checkpoint out = ckpt;
    for (const char* name : {"token_embedding", "pos_embedding", "mask_head.w", "mask_head.b"}) {
        out.remove(name);
    }
    out.frozen.clear();
    model::add_vision_adapters(out, seed);
    return out;
}

namespace {

bool in_scope(const std::string& name, ShuffleScope scope) {
    switch (scope) {
        case ShuffleScope::All:
            return model::is_attention_weight(name) || model::is_mlp_weight(name);
        case ShuffleScope::AttentionOnly: return model::is_attention_weight(name);
        default: return model::is_mlp_weight(name);
    }
}

}  // namespace

model::Checkpoint shuffle_weights(const model::Checkpoint& ckpt, ShuffleScope scope,
                                  std::uint64_t seed) {
    model::Checkpoint out = ckpt;
    for (const std::string& name : out.order) {
        if (!in_scope(name, scope)) continue;
        auto& data = out.at(name).data;
        CounterRng rng(derive_key(seed, Stream::WeightShuffle, name.c_str()));
        for (std::size_t i = data.size(); i > 1; --i) {
            std::swap(data[i - 1], data[rng.next_below(i)]);
        }
    }
    return out;
}

model::Checkpoint transfer_layers(const model::Checkpoint& target, const model::Checkpoint& donor,
                                  LayerRange range) {
    if (!(target.config == donor.config)) {
        throw ValidationError("transfer_layers requires identical model configs");
    }
    const auto [lo, hi] = layer_range_bounds(range, target.config.depth);
    model::Checkpoint out = target;
    for (const std::string& name : donor.order) {
        int block = 0;
        if (model::is_block_tensor(name, &block) && block >= lo && block < hi) {
            out.at(name) = donor.at(name);
        }
    }
    return out;
}

model::Checkpoint retag_stage(const model::Checkpoint& ckpt, model::Stage stage) {
    if (stage != model::Stage::Vision || ckpt.stage != model::Stage::Warmup) {
        throw ValidationError("retag_stage supports warmup -> vision only");
    }
    for (const char* name : {"patch_embedding.w", "patch_embedding.b", "class_token",
                             "pos_embedding", "class_head.w", "class_head.b"}) {
        if (!ckpt.has(name)) {
            throw ValidationError(std::string("cannot retag to vision: missing tensor ") + name +
                                  " (run reset-embeddings-and-head first)");
        }
    }
    if (ckpt.has("token_embedding") || ckpt.has("mask_head.w")) {
        throw ValidationError("cannot retag to vision: warm-up tensors still present");
    }
    model::Checkpoint out = ckpt;
    out.stage = stage;
    return out;
}

SurgeryPlan parse_plan(const std::string& text) {
    SurgeryPlan plan;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        std::string op;
        if (!(fields >> op)) continue;
        PlanStep step;
        try {
            if (op == "reset-embeddings-and-head") {
                step.kind = PlanStep::Kind::Reset;
                if (!(fields >> step.seed)) throw FormatError("missing seed");
            } else if (op == "shuffle-weights") {
                step.kind = PlanStep::Kind::Shuffle;
                std::string scope;
                if (!(fields >> scope >> step.seed)) throw FormatError("expected scope and seed");
                step.scope = shuffle_scope_from_string(scope);
            } else if (op == "transfer-layers") {
                step.kind = PlanStep::Kind::Transfer;
                std::string range;
                if (!(fields >> range)) throw FormatError("expected range and donor path");
                step.range = layer_range_from_string(range);
                std::getline(fields, step.donor_path);
                const auto start = step.donor_path.find_first_not_of(" \t");
                if (start == std::string::npos) throw FormatError("expected range and donor path");
                const auto end = step.donor_path.find_last_not_of(" \t\r");
                step.donor_path = step.donor_path.substr(start, end - start + 1);
            } else if (op == "retag-stage") {
                step.kind = PlanStep::Kind::Retag;
                std::string stage;
                if (!(fields >> stage)) throw FormatError("expected stage");
                if (stage != "vision") throw FormatError("only 'retag-stage vision' is supported");
            } else {
                throw FormatError("unknown step '" + op + "'");
            }
        } catch (const Error& e) {
            throw FormatError("bad surgery plan line " + std::to_string(lineno) + ": " + e.what());
        }
        plan.steps.push_back(std::move(step));
    }
    return plan;
}

std::string plan_to_text(const SurgeryPlan& plan) {
    std::string out;
    for (const PlanStep& step : plan.steps) {
        switch (step.kind) {
            case PlanStep::Kind::Reset:
                out += "reset-embeddings-and-head " + std::to_string(step.seed) + "\n";
                break;
            case PlanStep::Kind::Shuffle:
                out += std::string("shuffle-weights ") + to_string(step.scope) + " " +
                       std::to_string(step.seed) + "\n";
                break;
            case PlanStep::Kind::Transfer:
                out += std::string("transfer-layers ") + to_string(step.range) + " " +
                       step.donor_path + "\n";
                break;
            case PlanStep::Kind::Retag:
                out += "retag-stage vision\n";
                break;
        }
    }
    return out;
}

model::Checkpoint apply_plan(const model::Checkpoint& input, const SurgeryPlan& plan,
                             const DonorLoader& donor_loader) {
    model::Checkpoint out = input;
    for (const PlanStep& step : plan.steps) {
        switch (step.kind) {
            case PlanStep::Kind::Reset:
                out = reset_embeddings_and_head(out, step.seed);
                break;
            case PlanStep::Kind::Shuffle:
                out = shuffle_weights(out, step.scope, step.seed);
                break;
            case PlanStep::Kind::Transfer: {
                if (!donor_loader) throw ValidationError("transfer step needs a donor loader");
                out = transfer_layers(out, donor_loader(step.donor_path), step.range);
                break;
            }
            case PlanStep::Kind::Retag:
                out = retag_stage(out, model::Stage::Vision);
                break;
        }
    }
    return out;
}

}  // namespace procwarm::surgery
