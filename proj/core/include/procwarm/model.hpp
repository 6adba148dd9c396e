#pragma once

#include "procwarm/param_store.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace procwarm::model {

// Tensor names
//   token_embedding            (vocab_with_mask, width)   warm-up, frozen
//   pos_embedding              (seq_len, width)           warm-up, frozen
//   block<i>.attn.norm.gamma/beta, .attn.wq/bq/wk/bk/wv/bv/wo/bo
//   block<i>.mlp.norm.gamma/beta, .mlp.w1/b1/w2/b2
//   final_norm.gamma/beta
//   mask_head.w/b              (width, vocab) / (vocab)   warm-up
//   patch_embedding.w/b        (patch_dim, width)         vision
//   class_token                (1, width)                 vision
//   pos_embedding              (patch_count+1, width)     vision
//   class_head.w/b             (width, classes)           vision
// Weight matrices are stored (in, out); layers compute y = x W + b.

std::string block_prefix(int block);
bool is_block_tensor(const std::string& name, int* block = nullptr);
bool is_attention_weight(const std::string& name);
bool is_mlp_weight(const std::string& name);

// Warm-up checkpoint: frozen unit-norm token embedding, frozen positional
// table, truncated-normal weights (std 0.02, clipped at 2 std), unit
// norm gains, zero biases.
Checkpoint init_model(const ModelConfig& config, std::uint64_t seed);

// Vision checkpoint from scratch (the random-init baseline): same block
// init plus patch embedding, class token, (patch_count+1) positional
// table, classification head. Nothing frozen.
Checkpoint init_vision_model(const ModelConfig& config, std::uint64_t seed);

// Adds freshly initialized vision adapter tensors to a store that has
// none (shared by init_vision_model and checkpoint surgery).
void add_vision_adapters(Checkpoint& ckpt, std::uint64_t seed);

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ColVec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// Everything the backward pass needs, captured during forward. The `n*`
// matrices hold layer-norm outputs before the gain, so norm gradients can
// be read off them directly.
template <typename T>
struct BlockCache {
    RowMat<T> n1, q, k, v, ctx, n2, hpre, hact;
    ColVec<T> rstd1, rstd2;
    std::vector<RowMat<T>> probs;  // one (tokens, tokens) matrix per (example, head)
};

template <typename T>
struct ForwardCache {
    int batch = 0;
    int tokens = 0;
    RowMat<T> patches;  // vision only: (batch*patch_count, patch_dim)
    std::vector<BlockCache<T>> blocks;
    RowMat<T> nf;  // final norm before the gain
    ColVec<T> rstdf;
};

template <typename T>
using GradMap = std::map<std::string, Tensor<T>>;

// Warm-up forward: ids is a row-major (batch, seq_len) id array; result is
// (batch, seq_len, vocab) logits. No class token at this stage.
template <typename T>
Tensor<T> forward_tokens(const ParamStore<T>& m, const std::vector<std::uint16_t>& ids,
                         int batch, ForwardCache<T>* cache = nullptr);

// Vision forward: images is (batch, channels, image_size, image_size);
// result is (batch, num_classes) logits read off the class token.
template <typename T>
Tensor<T> forward_image(const ParamStore<T>& m, const Tensor<T>& images,
                        ForwardCache<T>* cache = nullptr);

// Exact gradients of the scalar loss whose logits gradient is `dlogits`.
// Frozen tensors get no entry. Non-finite gradients raise NumericError.
template <typename T>
GradMap<T> backward_tokens(const ParamStore<T>& m, const std::vector<std::uint16_t>& ids,
                           const ForwardCache<T>& cache, const Tensor<T>& dlogits);

template <typename T>
GradMap<T> backward_image(const ParamStore<T>& m, const ForwardCache<T>& cache,
                          const Tensor<T>& dlogits);

}  // namespace procwarm::model
