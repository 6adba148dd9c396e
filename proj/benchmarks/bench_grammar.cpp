#include <benchmark/benchmark.h>

#include "procwarm/grammar.hpp"

using namespace procwarm::grammar;

namespace {

GrammarSpec default_spec(Language lang) {
    GrammarSpec spec;
    spec.language = lang;
    if (lang == Language::WW) {
        spec.vocab_size = 128;
    } else {
        spec.k = 64;
        spec.vocab_size = 128;
    }
    spec.seq_len = 196;
    return spec;
}

void bench_sample(benchmark::State& state, Language lang) {
    const auto spec = default_spec(lang);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_sequence(spec, seed++));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

void bench_recognize(benchmark::State& state, Language lang) {
    const auto spec = default_spec(lang);
    const auto seq = sample_sequence(spec, 0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(recognize(spec, seq));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

void bench_mask(benchmark::State& state, Language lang) {
    const auto spec = default_spec(lang);
    const auto seq = sample_sequence(spec, 0);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_mask(spec, seq, 0.5, seed++));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}

}  // namespace

BENCHMARK_CAPTURE(bench_sample, dyck, Language::Dyck);
BENCHMARK_CAPTURE(bench_sample, dyck_shuffle, Language::DyckShuffle);
BENCHMARK_CAPTURE(bench_sample, ww, Language::WW);
BENCHMARK_CAPTURE(bench_recognize, dyck, Language::Dyck);
BENCHMARK_CAPTURE(bench_recognize, dyck_shuffle, Language::DyckShuffle);
BENCHMARK_CAPTURE(bench_recognize, ww, Language::WW);
BENCHMARK_CAPTURE(bench_mask, dyck, Language::Dyck);
