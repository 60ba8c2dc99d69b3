#pragma once

#include <cstdint>
#include <string_view>

namespace bigtan {

// FNV-1a over raw bytes. Used to derive reproducible sub-streams from
// structured inputs (names, coordinate bit patterns).
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 0xcbf29ce484222325ull) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a(s.data(), s.size(), h);
}

// SplitMix64. Satisfies UniformRandomBitGenerator, so the <random>
// distributions apply directly. Good enough statistically for test-point
// sampling; chosen for its trivially portable, seed-stable output.
struct SplitMix64 {
    using result_type = std::uint64_t;

    std::uint64_t state = 0;

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
};

// Deterministic combiner: independent-looking seed from (base, salt).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    SplitMix64 g{base + 0x9e3779b97f4a7c15ull * (salt + 1)};
    const std::uint64_t first = g();
    g.state = first ^ salt;
    return g();
}

}  // namespace bigtan
