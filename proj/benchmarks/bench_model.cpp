#include <benchmark/benchmark.h>

#include "procwarm/loss.hpp"
#include "procwarm/model.hpp"
#include "procwarm/model_config.hpp"

#include <vector>

using namespace procwarm::model;
using procwarm::train::masked_loss;

namespace {

std::vector<std::uint16_t> token_batch(const ModelConfig& config, int batch) {
    std::vector<std::uint16_t> ids(static_cast<std::size_t>(batch) * config.seq_len);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        ids[i] = static_cast<std::uint16_t>(i % (config.vocab_size_with_mask - 1));
    }
    return ids;
}

void bench_forward_tokens(benchmark::State& state) {
    auto config = config_preset("desk");
    config.seq_len = 64;
    config.vocab_size_with_mask = 9;
    const auto model = init_model(config, 1);
    const int batch = static_cast<int>(state.range(0));
    const auto ids = token_batch(config, batch);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_tokens(model, ids, batch));
    }
    state.SetItemsProcessed(state.iterations() * batch * config.seq_len);
}

void bench_forward_backward_tokens(benchmark::State& state) {
    auto config = config_preset("desk");
    config.seq_len = 64;
    config.vocab_size_with_mask = 9;
    const auto model = init_model(config, 1);
    const int batch = static_cast<int>(state.range(0));
    const auto ids = token_batch(config, batch);

    std::vector<std::vector<procwarm::grammar::MaskTarget>> targets(static_cast<std::size_t>(batch));
    for (auto& row : targets) row.push_back({0, 4});

    for (auto _ : state) {
        ForwardCache<float> cache;
        const auto logits = forward_tokens(model, ids, batch, &cache);
        auto loss = masked_loss(logits, targets);
        benchmark::DoNotOptimize(backward_tokens(model, ids, cache, loss.dlogits));
    }
    state.SetItemsProcessed(state.iterations() * batch * config.seq_len);
}

void bench_forward_image(benchmark::State& state) {
    const auto config = config_preset("desk");
    const auto model = init_vision_model(config, 1);
    const int batch = static_cast<int>(state.range(0));
    Tensor<float> images;
    images.shape = {static_cast<std::size_t>(batch), static_cast<std::size_t>(config.image_channels),
                    static_cast<std::size_t>(config.image_size), static_cast<std::size_t>(config.image_size)};
    images.data.assign(images.numel(), 0.5f);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_image(model, images));
    }
    state.SetItemsProcessed(state.iterations() * batch);
}

}  // namespace

BENCHMARK(bench_forward_tokens)->Arg(8)->Arg(64);
BENCHMARK(bench_forward_backward_tokens)->Arg(8)->Arg(64);
BENCHMARK(bench_forward_image)->Arg(8)->Arg(64);
