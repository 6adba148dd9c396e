#include "procwarm/loss.hpp"

#include "procwarm/errors.hpp"

#include <cmath>

namespace procwarm::train {

namespace {

// Writes softmax(z) into `probs` and returns log(sum(exp(z))) computed
// against the row max for stability.
template <typename T>
T stable_softmax(const T* z, int n, std::vector<T>& probs) {
    T mx = z[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, z[i]);
    T sum = T(0);
    for (int i = 0; i < n; ++i) {
        probs[static_cast<std::size_t>(i)] = std::exp(z[i] - mx);
        sum += probs[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) probs[static_cast<std::size_t>(i)] /= sum;
    return mx + std::log(sum);
}

template <typename T>
int argmax(const T* z, int n) {
    int best = 0;
    for (int i = 1; i < n; ++i) {
        if (z[i] > z[best]) best = i;
    }
    return best;
}

}  // namespace

template <typename T>
LossResult<T> masked_loss(const model::Tensor<T>& logits,
                          const std::vector<std::vector<grammar::MaskTarget>>& targets) {
    if (logits.shape.size() != 3) throw ValidationError("masked_loss expects (batch, N, vocab)");
    const auto batch = static_cast<std::size_t>(logits.shape[0]);
    const int n = static_cast<int>(logits.shape[1]);
    const int vocab = static_cast<int>(logits.shape[2]);
    if (targets.size() != batch) {
        throw ValidationError("target list count does not match the batch");
    }
    std::size_t total = 0;
    for (const auto& list : targets) total += list.size();
    if (total == 0) throw ValidationError("empty target set");

    LossResult<T> out;
    out.dlogits = model::Tensor<T>(logits.shape);
    const T inv = T(1) / static_cast<T>(total);
    double loss = 0.0;
    std::size_t hits = 0;
    std::vector<T> probs(static_cast<std::size_t>(vocab));

    for (std::size_t e = 0; e < batch; ++e) {
        for (const grammar::MaskTarget& t : targets[e]) {
            if (t.position >= static_cast<std::uint32_t>(n)) {
                throw ValidationError("target position out of range: " +
                                      std::to_string(t.position));
            }
            if (t.symbol >= vocab) {
                throw ValidationError("target symbol out of range: " + std::to_string(t.symbol));
            }
            const std::size_t row = (e * n + t.position) * static_cast<std::size_t>(vocab);
            const T* z = logits.data.data() + row;
            const T lse = stable_softmax(z, vocab, probs);
            loss += static_cast<double>(lse - z[t.symbol]);
            if (argmax(z, vocab) == t.symbol) ++hits;
            T* dz = out.dlogits.data.data() + row;
            for (int i = 0; i < vocab; ++i) dz[i] = probs[static_cast<std::size_t>(i)] * inv;
            dz[t.symbol] -= inv;
        }
    }
    out.loss = static_cast<T>(loss / static_cast<double>(total));
    out.accuracy = static_cast<double>(hits) / static_cast<double>(total);
    return out;
}

template <typename T>
LossResult<T> class_loss(const model::Tensor<T>& logits, const std::vector<std::uint16_t>& labels,
                         double label_smoothing) {
    if (logits.shape.size() != 2) throw ValidationError("class_loss expects (batch, classes)");
    const auto batch = static_cast<std::size_t>(logits.shape[0]);
    const int classes = static_cast<int>(logits.shape[1]);
    if (labels.size() != batch) throw ValidationError("label count does not match the batch");
    if (batch == 0) throw ValidationError("empty target set");
    if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
        throw ValidationError("label_smoothing must be in [0,1)");
    }

    LossResult<T> out;
    out.dlogits = model::Tensor<T>(logits.shape);
    const T inv = T(1) / static_cast<T>(batch);
    const T eps = static_cast<T>(label_smoothing);
    const T off = eps / static_cast<T>(classes);
    const T on = T(1) - eps + off;
    double loss = 0.0;
    std::size_t hits = 0;
    std::vector<T> probs(static_cast<std::size_t>(classes));

    for (std::size_t e = 0; e < batch; ++e) {
        const int y = labels[e];
        if (y >= classes) throw ValidationError("label out of range: " + std::to_string(y));
        const T* z = logits.data.data() + e * static_cast<std::size_t>(classes);
        const T lse = stable_softmax(z, classes, probs);
        double ce = static_cast<double>(on) * static_cast<double>(lse - z[y]);
        for (int i = 0; i < classes; ++i) {
            if (i != y) ce += static_cast<double>(off) * static_cast<double>(lse - z[i]);
        }
        loss += ce;
        if (argmax(z, classes) == y) ++hits;
        T* dz = out.dlogits.data.data() + e * static_cast<std::size_t>(classes);
        for (int i = 0; i < classes; ++i) {
            dz[i] = (probs[static_cast<std::size_t>(i)] - (i == y ? on : off)) * inv;
        }
    }
    out.loss = static_cast<T>(loss / static_cast<double>(batch));
    out.accuracy = static_cast<double>(hits) / static_cast<double>(batch);
    return out;
}

template LossResult<float> masked_loss<float>(
    const model::Tensor<float>&, const std::vector<std::vector<grammar::MaskTarget>>&);
template LossResult<double> masked_loss<double>(
    const model::Tensor<double>&, const std::vector<std::vector<grammar::MaskTarget>>&);
template LossResult<float> class_loss<float>(const model::Tensor<float>&,
                                             const std::vector<std::uint16_t>&, double);
template LossResult<double> class_loss<double>(const model::Tensor<double>&,
                                               const std::vector<std::uint16_t>&, double);

}  // namespace procwarm::train
