#include "procwarm/optimizer.hpp"

#include "procwarm/errors.hpp"

#include <cmath>

namespace procwarm::train {

template <typename T>
void adamw_step(model::ParamStore<T>& params, const model::GradMap<T>& grads,
                AdamWState<T>& state, const AdamWConfig& cfg) {
    state.t += 1;
    const T b1 = static_cast<T>(cfg.beta1);
    const T b2 = static_cast<T>(cfg.beta2);
    const T bc1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(state.t)));
    const T bc2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(state.t)));
    const T lr = static_cast<T>(cfg.lr);
    const T eps = static_cast<T>(cfg.eps);

    for (const auto& [name, grad] : grads) {
        if (params.is_frozen(name)) {
            throw ValidationError("gradient supplied for frozen tensor: " + name);
        }
        model::Tensor<T>& p = params.at(name);
        if (p.shape != grad.shape) {
            throw ValidationError("gradient shape mismatch for tensor: " + name);
        }
        auto mit = state.m.find(name);
        if (mit == state.m.end()) {
            mit = state.m.emplace(name, model::Tensor<T>(p.shape)).first;
            state.v.emplace(name, model::Tensor<T>(p.shape));
        }
        model::Tensor<T>& m = mit->second;
        model::Tensor<T>& v = state.v.at(name);
        const T decay = p.shape.size() >= 2 ? static_cast<T>(cfg.weight_decay) : T(0);

        for (std::size_t i = 0; i < p.data.size(); ++i) {
            const T g = grad.data[i];
            m.data[i] = b1 * m.data[i] + (T(1) - b1) * g;
            v.data[i] = b2 * v.data[i] + (T(1) - b2) * g * g;
            const T mhat = m.data[i] / bc1;
            const T vhat = v.data[i] / bc2;
            p.data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + decay * p.data[i]);
        }
    }
}

template void adamw_step<float>(model::ParamStore<float>&, const model::GradMap<float>&,
                                AdamWState<float>&, const AdamWConfig&);
template void adamw_step<double>(model::ParamStore<double>&, const model::GradMap<double>&,
                                 AdamWState<double>&, const AdamWConfig&);

}  // namespace procwarm::train
