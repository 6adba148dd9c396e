#pragma once

#include <cstdint>
#include <string_view>

namespace procwarm {

// Named sub-streams derived from one global seed. Keeping the purposes
// apart means e.g. mask selection never perturbs sequence sampling.
enum class Stream : std::uint64_t {
    Sample = 1,
    Mask = 2,
    Shuffle = 3,
    Init = 4,
    Batch = 5,
    Augment = 6,
    Dataset = 7,
    WeightShuffle = 8,
    Eval = 9,
};

// Counter-based generator: output i is a 64-bit mix of (key, i). There is
// no hidden state beyond the counter, so independent streams are cheap to
// derive and corpora can be generated in parallel by example index.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t x);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double next_double();

    // Uniform in [0, n), unbiased (multiply-shift with rejection). n > 0.
    std::uint64_t next_below(std::uint64_t n);

    // Standard normal via Box-Muller; the spare value is cached.
    double next_normal();

    // Normal(0, std) rejected outside [lo, hi].
    double next_trunc_normal(double std_dev, double lo, double hi);

    bool next_bool() { return (next_u64() >> 63) != 0; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Derive an independent key from (seed, stream, index).
std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t index);

// Same, keyed by an arbitrary label (e.g. a tensor name).
std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::string_view label);

}  // namespace procwarm
