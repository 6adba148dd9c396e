#pragma once

#include "procwarm/model.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace procwarm::train {

struct AdamWConfig {
    double lr = 2e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.05;
};

// First/second moment buffers, allocated lazily per updated tensor.
template <typename T>
struct AdamWState {
    std::uint64_t t = 0;
    std::map<std::string, model::Tensor<T>> m;
    std::map<std::string, model::Tensor<T>> v;
};

// One Adam step with decoupled weight decay. Tensors without a gradient
// entry (frozen ones in particular) are untouched and acquire no state;
// decay applies only to tensors of rank 2 or higher, so biases and norm
// parameters are never decayed.
template <typename T>
void adamw_step(model::ParamStore<T>& params, const model::GradMap<T>& grads,
                AdamWState<T>& state, const AdamWConfig& cfg);

}  // namespace procwarm::train
