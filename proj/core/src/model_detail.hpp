#pragma once

#include "procwarm/model.hpp"

#include <cmath>

namespace procwarm::model::detail {

constexpr double kLnEps = 1e-5;

template <typename T>
T gelu(T x) {
    return T(0.5) * x * (T(1) + std::erf(x * T(0.7071067811865476)));
}

template <typename T>
T gelu_grad(T x) {
    const T cdf = T(0.5) * (T(1) + std::erf(x * T(0.7071067811865476)));
    const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
    return cdf + x * pdf;
}

// Row-wise layer norm, output before the gain: n = (x - mean) * rstd.
template <typename T>
void layer_norm(const RowMat<T>& x, RowMat<T>& n, ColVec<T>& rstd) {
    const ColVec<T> mu = x.rowwise().mean();
    n = x.colwise() - mu;
    const ColVec<T> var = n.array().square().rowwise().mean().matrix();
    rstd = (var.array() + T(kLnEps)).rsqrt().matrix();
    n = (n.array().colwise() * rstd.array()).matrix();
}

template <typename T>
RowMat<T> apply_gain(const RowMat<T>& n, const Tensor<T>& gamma, const Tensor<T>& beta) {
    const auto g = as_vector(gamma).transpose().array();
    const auto b = as_vector(beta).transpose().array();
    return ((n.array().rowwise() * g).rowwise() + b).matrix();
}

// Gradient through y = n * gamma + beta given dy; writes dgamma/dbeta when
// the slots are non-null and returns dx.
template <typename T>
RowMat<T> layer_norm_backward(const RowMat<T>& dy, const RowMat<T>& n, const ColVec<T>& rstd,
                              const Tensor<T>& gamma, Tensor<T>* dgamma, Tensor<T>* dbeta) {
    if (dgamma) as_vector(*dgamma) = (dy.array() * n.array()).colwise().sum().transpose().matrix();
    if (dbeta) as_vector(*dbeta) = dy.colwise().sum().transpose();
    const RowMat<T> dn =
        (dy.array().rowwise() * as_vector(gamma).transpose().array()).matrix();
    const ColVec<T> m1 = dn.rowwise().mean();
    const ColVec<T> m2 = (dn.array() * n.array()).rowwise().mean().matrix();
    RowMat<T> dx = dn.colwise() - m1;
    dx -= (n.array().colwise() * m2.array()).matrix();
    return (dx.array().colwise() * rstd.array()).matrix();
}

template <typename T>
Tensor<T>* grad_slot(const ParamStore<T>& m, GradMap<T>& grads, const std::string& name) {
    if (m.is_frozen(name)) return nullptr;
    Tensor<T>& t = grads[name];
    t.shape = m.at(name).shape;
    t.data.assign(static_cast<std::size_t>(t.numel()), T(0));
    return &t;
}

template <typename T>
void check_finite(const GradMap<T>& grads) {
    for (const auto& [name, t] : grads) {
        for (T v : t.data) {
            if (!std::isfinite(v)) {
                throw NumericError("non-finite gradient in tensor " + name);
            }
        }
    }
}

}  // namespace procwarm::model::detail
