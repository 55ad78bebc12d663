#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string_view>

namespace flarelite::hashing {

inline constexpr std::uint64_t kNullHash = 0x2545F4914F6CDD1DULL;
inline constexpr std::uint64_t kMix = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Bit pattern used for equality and hashing of Float64 keys: -0.0 folds
/// onto 0.0 and every NaN onto one canonical NaN.
inline std::uint64_t float_key_bits(double d) {
    if (d == 0.0) d = 0.0;
    if (std::isnan(d)) return 0x7ff8000000000000ULL;
    std::uint64_t b = 0;
    std::memcpy(&b, &d, sizeof b);
    return b;
}

inline std::uint64_t combine(std::uint64_t h, std::uint64_t part) {
    h = (h ^ part) * kMix;
    h ^= h >> 29;
    return h;
}

inline std::size_t slot_of(std::uint64_t h, int bits) {
    return static_cast<std::size_t>((h * kMix) >> (64 - bits));
}

} // namespace flarelite::hashing
