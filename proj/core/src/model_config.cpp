#include "procwarm/model_config.hpp"

#include "procwarm/errors.hpp"

namespace procwarm::model {

void ModelConfig::validate() const {
    if (depth < 0) throw ValidationError("model depth must be nonnegative");
    if (width < 1) throw ValidationError("model width must be positive");
    if (heads < 1) throw ValidationError("head count must be positive");
    if (width % heads != 0) {
        throw ValidationError("width must be divisible by heads: " + std::to_string(width) +
                              " % " + std::to_string(heads) + " != 0");
    }
    if (mlp_ratio < 1) throw ValidationError("mlp_ratio must be positive");
    if (seq_len < 1) throw ValidationError("seq_len must be positive");
    if (vocab_size_with_mask < 2) throw ValidationError("vocabulary too small");
    if (num_classes < 2) throw ValidationError("num_classes must be at least 2");
    if (patch_size < 1 || image_channels < 1 || image_size < 1) {
        throw ValidationError("image dimensions must be positive");
    }
    if (image_size % patch_size != 0) {
        throw ValidationError("image_size must be divisible by patch_size: " +
                              std::to_string(image_size) + " % " + std::to_string(patch_size));
    }
}

ModelConfig config_preset(const std::string& name) {
    ModelConfig c;
    c.preset = name;
    if (name == "vit-t") {
        c.depth = 12;
        c.width = 192;
        c.heads = 3;
        c.mlp_ratio = 4;
        c.patch_size = 16;
        c.image_size = 224;
        c.seq_len = 196;
    } else if (name == "desk") {
        c.depth = 6;
        c.width = 64;
        c.heads = 4;
        c.mlp_ratio = 4;
        c.patch_size = 4;
        c.image_size = 32;
        c.seq_len = 196;
    } else {
        throw ValidationError("unknown model preset: " + name + " (expected vit-t|desk)");
    }
    return c;
}

KvMap config_to_kv(const ModelConfig& c, const std::string& prefix) {
    KvMap kv;
    kv[prefix + "depth"] = std::to_string(c.depth);
    kv[prefix + "width"] = std::to_string(c.width);
    kv[prefix + "heads"] = std::to_string(c.heads);
    kv[prefix + "mlp_ratio"] = std::to_string(c.mlp_ratio);
    kv[prefix + "seq_len"] = std::to_string(c.seq_len);
    kv[prefix + "vocab_size_with_mask"] = std::to_string(c.vocab_size_with_mask);
    kv[prefix + "num_classes"] = std::to_string(c.num_classes);
    kv[prefix + "patch_size"] = std::to_string(c.patch_size);
    kv[prefix + "image_channels"] = std::to_string(c.image_channels);
    kv[prefix + "image_size"] = std::to_string(c.image_size);
    kv[prefix + "preset"] = c.preset;
    return kv;
}

ModelConfig config_from_kv(const KvMap& kv, const std::string& prefix) {
    ModelConfig c;
    c.depth = static_cast<int>(kv_get_int(kv, prefix + "depth"));
    c.width = static_cast<int>(kv_get_int(kv, prefix + "width"));
    c.heads = static_cast<int>(kv_get_int(kv, prefix + "heads"));
    c.mlp_ratio = static_cast<int>(kv_get_int(kv, prefix + "mlp_ratio"));
    c.seq_len = static_cast<int>(kv_get_int(kv, prefix + "seq_len"));
    c.vocab_size_with_mask = static_cast<int>(kv_get_int(kv, prefix + "vocab_size_with_mask"));
    c.num_classes = static_cast<int>(kv_get_int(kv, prefix + "num_classes"));
    c.patch_size = static_cast<int>(kv_get_int(kv, prefix + "patch_size"));
    c.image_channels = static_cast<int>(kv_get_int(kv, prefix + "image_channels"));
    c.image_size = static_cast<int>(kv_get_int(kv, prefix + "image_size"));
    c.preset = kv_get(kv, prefix + "preset");
    c.validate();
    return c;
}

}  // namespace procwarm::model
