#pragma once

#include "procwarm/grammar.hpp"
#include "procwarm/tensor.hpp"

#include <cstdint>
#include <vector>

namespace procwarm::train {

template <typename T>
struct LossResult {
    T loss = T(0);
    double accuracy = 0.0;
    model::Tensor<T> dlogits;  // gradient of the scalar loss, same shape as logits
};

// Mean cross-entropy over every masked position in the batch, with the
// sampled source symbol as target (teacher forcing when the grammar
// admits several completions). Accuracy is the argmax hit rate over the
// same positions. `targets` holds one list per example, aligned with the
// (batch, seq_len, vocab) logits.
template <typename T>
LossResult<T> masked_loss(const model::Tensor<T>& logits,
                          const std::vector<std::vector<grammar::MaskTarget>>& targets);

// Mean cross-entropy over (batch, classes) logits with optional label
// smoothing (default off).
template <typename T>
LossResult<T> class_loss(const model::Tensor<T>& logits, const std::vector<std::uint16_t>& labels,
                         double label_smoothing = 0.0);

}  // namespace procwarm::train
