#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace procwarm {

// FNV-1a, used for config hashes and idempotence checks (not security).
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(const void* bytes, std::size_t len,
                             std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string hex64(std::uint64_t value);

// Hash of a file's contents; throws IoError if unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace procwarm
