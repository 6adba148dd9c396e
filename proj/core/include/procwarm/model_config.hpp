#pragma once

#include "procwarm/kv.hpp"

#include <string>

namespace procwarm::model {

// Transformer shape shared by both stages. The token fields (seq_len,
// vocab) drive the warm-up adapter; the image fields drive the vision
// adapter. Block shapes depend only on depth/width/heads/mlp_ratio, which
// is what lets surgery move blocks between stages.
struct ModelConfig {
    int depth = 6;
    int width = 64;
    int heads = 4;
    int mlp_ratio = 4;
    int seq_len = 196;
    int vocab_size_with_mask = 129;
    int num_classes = 10;
    int patch_size = 4;
    int image_channels = 3;
    int image_size = 32;
    std::string preset = "desk";

    bool operator==(const ModelConfig&) const = default;

    void validate() const;

    int head_dim() const { return width / heads; }
    int hidden_dim() const { return width * mlp_ratio; }
    int patches_per_side() const { return image_size / patch_size; }
    int patch_count() const { return patches_per_side() * patches_per_side(); }
    int patch_dim() const { return patch_size * patch_size * image_channels; }
};

// Presets: "vit-t" (12 layers, 192 wide, 3 heads) and "desk" (6, 64, 4).
ModelConfig config_preset(const std::string& name);

KvMap config_to_kv(const ModelConfig& c, const std::string& prefix);
ModelConfig config_from_kv(const KvMap& kv, const std::string& prefix);

}  // namespace procwarm::model
