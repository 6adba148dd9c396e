#include "procwarm/model.hpp"

#include "procwarm/rng.hpp"

#include <cctype>
#include <cmath>

namespace procwarm::model {

std::string block_prefix(int block) { return "block" + std::to_string(block) + "."; }

bool is_block_tensor(const std::string& name, int* block) {
    if (name.rfind("block", 0) != 0) return false;
    std::size_t i = 5;
    if (i >= name.size() || !std::isdigit(static_cast<unsigned char>(name[i]))) return false;
    int b = 0;
    while (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i]))) {
        b = b * 10 + (name[i] - '0');
        ++i;
    }
    if (i >= name.size() || name[i] != '.') return false;
    if (block) *block = b;
    return true;
}

bool is_attention_weight(const std::string& name) {
    if (!is_block_tensor(name)) return false;
    const auto dot = name.find('.');
    const std::string leaf = name.substr(dot + 1);
    return leaf == "attn.wq" || leaf == "attn.wk" || leaf == "attn.wv" || leaf == "attn.wo";
}

bool is_mlp_weight(const std::string& name) {
    if (!is_block_tensor(name)) return false;
    const auto dot = name.find('.');
    const std::string leaf = name.substr(dot + 1);
    return leaf == "mlp.w1" || leaf == "mlp.w2";
}

namespace {

constexpr double kInitStd = 0.02;

CounterRng tensor_rng(std::uint64_t seed, const std::string& name) {
    return CounterRng(derive_key(seed, Stream::Init, name.c_str()));
}

void fill_trunc_normal(Checkpoint& ckpt, const std::string& name, std::uint64_t seed) {
    auto rng = tensor_rng(seed, name);
    for (float& v : ckpt.at(name).data) {
        v = static_cast<float>(rng.next_trunc_normal(kInitStd, -2.0 * kInitStd, 2.0 * kInitStd));
    }
}

void fill_unit_norm_rows(Checkpoint& ckpt, const std::string& name, std::uint64_t seed) {
    auto rng = tensor_rng(seed, name);
    Tensor<float>& t = ckpt.at(name);
    const auto rows = static_cast<std::size_t>(t.shape[0]);
    const auto cols = static_cast<std::size_t>(t.shape[1]);
    for (std::size_t r = 0; r < rows; ++r) {
        double norm2 = 0.0;
        std::vector<double> row(cols);
        for (std::size_t c = 0; c < cols; ++c) {
            row[c] = rng.next_normal();
            norm2 += row[c] * row[c];
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t c = 0; c < cols; ++c) {
            t.data[r * cols + c] = static_cast<float>(row[c] * inv);
        }
    }
}

void fill_ones(Checkpoint& ckpt, const std::string& name) {
    for (float& v : ckpt.at(name).data) v = 1.0f;
}

// Declares one encoder block's tensors and initializes them: matrices
// truncated normal, biases zero, norm gains one.
void add_block(Checkpoint& ckpt, int b, std::uint64_t seed) {
    const std::string p = block_prefix(b);
    const std::int64_t d = ckpt.config.width;
    const std::int64_t f = ckpt.config.hidden_dim();

    ckpt.add(p + "attn.norm.gamma", {d});
    ckpt.add(p + "attn.norm.beta", {d});
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
        ckpt.add(p + w, {d, d});
        fill_trunc_normal(ckpt, p + w, seed);
    }
    for (const char* bias : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) ckpt.add(p + bias, {d});
    ckpt.add(p + "mlp.norm.gamma", {d});
    ckpt.add(p + "mlp.norm.beta", {d});
    ckpt.add(p + "mlp.w1", {d, f});
    fill_trunc_normal(ckpt, p + "mlp.w1", seed);
    ckpt.add(p + "mlp.b1", {f});
    ckpt.add(p + "mlp.w2", {f, d});
    fill_trunc_normal(ckpt, p + "mlp.w2", seed);
    ckpt.add(p + "mlp.b2", {d});
    fill_ones(ckpt, p + "attn.norm.gamma");
    fill_ones(ckpt, p + "mlp.norm.gamma");
}

void add_trunk(Checkpoint& ckpt, std::uint64_t seed) {
    for (int b = 0; b < ckpt.config.depth; ++b) add_block(ckpt, b, seed);
    ckpt.add("final_norm.gamma", {ckpt.config.width});
    ckpt.add("final_norm.beta", {ckpt.config.width});
    fill_ones(ckpt, "final_norm.gamma");
}

}  // namespace

Checkpoint init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.stage = Stage::Warmup;
    ckpt.seed = seed;
    const std::int64_t d = config.width;

    ckpt.add("token_embedding", {config.vocab_size_with_mask, d}, /*freeze=*/true);
    fill_unit_norm_rows(ckpt, "token_embedding", seed);
    ckpt.add("pos_embedding", {config.seq_len, d}, /*freeze=*/true);
    fill_trunc_normal(ckpt, "pos_embedding", seed);

    add_trunk(ckpt, seed);

    const std::int64_t vocab = config.vocab_size_with_mask - 1;
    ckpt.add("mask_head.w", {d, vocab});
    fill_trunc_normal(ckpt, "mask_head.w", seed);
    ckpt.add("mask_head.b", {vocab});
    return ckpt;
}

void add_vision_adapters(Checkpoint& ckpt, std::uint64_t seed) {
    const ModelConfig& c = ckpt.config;
    const std::int64_t d = c.width;
    ckpt.add("patch_embedding.w", {c.patch_dim(), d});
    fill_trunc_normal(ckpt, "patch_embedding.w", seed);
    ckpt.add("patch_embedding.b", {d});
    ckpt.add("class_token", {1, d});
    fill_trunc_normal(ckpt, "class_token", seed);
    ckpt.add("pos_embedding", {c.patch_count() + 1, d});
    fill_trunc_normal(ckpt, "pos_embedding", seed);
    ckpt.add("class_head.w", {d, c.num_classes});
    fill_trunc_normal(ckpt, "class_head.w", seed);
    ckpt.add("class_head.b", {c.num_classes});
}

Checkpoint init_vision_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.stage = Stage::Vision;
    ckpt.seed = seed;
    add_trunk(ckpt, seed);
    add_vision_adapters(ckpt, seed);
    return ckpt;
}

}  // namespace procwarm::model
