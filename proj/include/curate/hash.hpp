#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace curate {

// 64-bit hashing used everywhere determinism matters. std::hash is not
// guaranteed stable across implementations, so sharding, Bloom filters,
// MinHash and feature hashing all route through these.

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a over raw bytes.
inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seeded string hash: FNV-1a finalized through splitmix64 so low bits mix well.
inline std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0) {
    return splitmix64(fnv1a64(bytes) ^ splitmix64(seed));
}

/// Deterministic RNG stream (counter-based, SplitMix64).
class SplitMixRng {
public:
    explicit SplitMixRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, bound) without modulo bias (rejection sampling).
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// In-place Fisher-Yates shuffle with a fully specified RNG, so shuffles are
/// reproducible across platforms (std::shuffle is implementation-defined).
template <typename Vec>
void deterministic_shuffle(Vec& v, SplitMixRng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        using std::swap;
        swap(v[i - 1], v[j]);
    }
}

}  // namespace curate
