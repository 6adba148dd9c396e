#include "procwarm/rng.hpp"

#include "procwarm/hash.hpp"

#include <cmath>

namespace procwarm {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;
}

std::uint64_t CounterRng::mix(std::uint64_t x) {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ull;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebull;
    x ^= x >> 31;
    return x;
}

std::uint64_t CounterRng::next_u64() {
    return mix(key_ + (counter_++) * kGolden);
}

double CounterRng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t CounterRng::next_below(std::uint64_t n) {
    // Lemire's nearly-divisionless bounded generation.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        while (lo < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::next_normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 bounded away from zero so log stays finite.
    double u1 = next_double();
    if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
}

double CounterRng::next_trunc_normal(double std_dev, double lo, double hi) {
    for (;;) {
        const double x = next_normal() * std_dev;
        if (x >= lo && x <= hi) return x;
    }
}

std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t index) {
    std::uint64_t k = CounterRng::mix(seed ^ kGolden);
    k = CounterRng::mix(k ^ static_cast<std::uint64_t>(stream) * 0xda942042e4dd58b5ull);
    k = CounterRng::mix(k ^ index);
    return k;
}

std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::string_view label) {
    return derive_key(seed, stream, fnv1a64(label));
}

}  // namespace procwarm
