#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "curate/hash.hpp"

namespace curate {

/// Optimal hasher count for a target false-positive rate:
/// k = -ln(eps) / ln(2), rounded to the nearest integer, minimum 1.
inline std::uint32_t bloom_optimal_k(double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("bloom_optimal_k: eps must be in (0, 1)");
    const double k = -std::log(eps) / std::log(2.0);
    const auto rounded = static_cast<std::uint32_t>(std::llround(k));
    return rounded < 1 ? 1 : rounded;
}

/// False-positive rate of a filter with m bits and k hashers after n inserts.
inline double bloom_fpr(std::uint64_t n, std::uint32_t k, std::uint64_t m) {
    return std::pow(1.0 - std::exp(-static_cast<double>(k) * static_cast<double>(n) /
                                   static_cast<double>(m)),
                    static_cast<double>(k));
}

/// Smallest bit count m with (1 - e^{-kn/m})^k <= eps, found by binary
/// search (the formula has no closed form in m).
inline std::uint64_t bloom_optimal_m(std::uint64_t n, std::uint32_t k, double eps) {
    if (n < 1 || k < 1) throw std::invalid_argument("bloom_optimal_m: n and k must be >= 1");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("bloom_optimal_m: eps must be in (0, 1)");
    std::uint64_t hi = 64;
    while (bloom_fpr(n, k, hi) > eps) hi *= 2;
    std::uint64_t lo = 1;
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (bloom_fpr(n, k, mid) <= eps)
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

/// Hoeffding bound on the probability that a never-seen span is falsely
/// marked a duplicate: N n-grams total, S already contained, threshold T,
/// filter false-positive rate eps.
inline double false_mark_bound(std::uint64_t total, std::uint64_t contained, double threshold,
                               double eps) {
    if (contained > total) throw std::invalid_argument("false_mark_bound: S must be <= N");
    if (total == contained) return 1.0;  // degenerate: no room for false positives
    const double n = static_cast<double>(total);
    const double s = static_cast<double>(contained);
    if (threshold * n < s)
        throw std::invalid_argument("false_mark_bound: requires T*N >= S");
    const double needed = threshold * n - s - eps * (n - s);
    return std::exp(-2.0 * needed * needed / (n - s));
}

/// Concurrent Bloom filter over token n-grams (or any byte strings).
/// Bits only flip 0 -> 1, so concurrent check-and-insert is lock-free;
/// the only permitted race is two simultaneous first inserts of the same
/// item both reporting "absent", after which both insert (harmless).
class BloomFilter {
public:
    BloomFilter(std::uint64_t m_bits, std::uint32_t k, std::uint64_t n_target = 0,
                double eps = 0.0, std::uint64_t seed = 0)
        : m_(m_bits), k_(k), n_target_(n_target), eps_(eps), seed_(seed) {
        if (m_ < 1 || k_ < 1) throw std::invalid_argument("BloomFilter: m and k must be >= 1");
        words_ = (m_ + 63) / 64;
        bits_ = std::make_unique<std::atomic<std::uint64_t>[]>(words_);
        for (std::uint64_t i = 0; i < words_; ++i) bits_[i].store(0, std::memory_order_relaxed);
    }

    /// Filter sized for n expected inserts at false-positive rate eps.
    static BloomFilter sized_for(std::uint64_t n, double eps, std::uint64_t seed = 0) {
        const std::uint32_t k = bloom_optimal_k(eps);
        return BloomFilter(bloom_optimal_m(n, k, eps), k, n, eps, seed);
    }

    std::uint64_t bit_count() const { return m_; }
    std::uint32_t hasher_count() const { return k_; }
    std::uint64_t n_target() const { return n_target_; }
    double eps() const { return eps_; }
    std::uint64_t seed() const { return seed_; }

    bool query(std::string_view item) const {
        std::uint64_t h1, h2;
        derive(item, h1, h2);
        for (std::uint32_t i = 0; i < k_; ++i) {
            const std::uint64_t bit = (h1 + i * h2) % m_;
            if (!(bits_[bit / 64].load(std::memory_order_relaxed) & (1ULL << (bit % 64))))
                return false;
        }
        return true;
    }

    void insert(std::string_view item) {
        std::uint64_t h1, h2;
        derive(item, h1, h2);
        for (std::uint32_t i = 0; i < k_; ++i) {
            const std::uint64_t bit = (h1 + i * h2) % m_;
            bits_[bit / 64].fetch_or(1ULL << (bit % 64), std::memory_order_relaxed);
        }
    }

    /// Atomic membership test plus insert: returns whether the item was
    /// already present; afterwards it always is. No lost inserts.
    bool check_and_insert(std::string_view item) {
        std::uint64_t h1, h2;
        derive(item, h1, h2);
        bool all_set = true;
        for (std::uint32_t i = 0; i < k_; ++i) {
            const std::uint64_t bit = (h1 + i * h2) % m_;
            const std::uint64_t mask = 1ULL << (bit % 64);
            const std::uint64_t old = bits_[bit / 64].fetch_or(mask, std::memory_order_relaxed);
            if (!(old & mask)) all_set = false;
        }
        return all_set;
    }

    /// Number of set bits (diagnostic).
    std::uint64_t popcount() const {
        std::uint64_t total = 0;
        for (std::uint64_t i = 0; i < words_; ++i)
            total += static_cast<std::uint64_t>(
                __builtin_popcountll(bits_[i].load(std::memory_order_relaxed)));
        return total;
    }

    bool same_bits(const BloomFilter& other) const {
        if (m_ != other.m_) return false;
        for (std::uint64_t i = 0; i < words_; ++i)
            if (bits_[i].load(std::memory_order_relaxed) !=
                other.bits_[i].load(std::memory_order_relaxed))
                return false;
        return true;
    }

    // --- snapshot format -----------------------------------------------
    // Little-endian throughout:
    //   bytes 0..3   magic "BFF1"
    //   bytes 4..11  m (u64, bit count)
    //   bytes 12..19 k (u64)
    //   bytes 20..27 n_target (u64)
    //   bytes 28..35 eps (IEEE-754 double)
    //   bytes 36..43 seed (u64)
    //   bytes 44..   ceil(m/8) bytes of bit array; bit i lives in byte i/8
    //                at position i%8 (LSB first)

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + path + " for writing");
        f.write("BFF1", 4);
        auto put_u64 = [&](std::uint64_t v) {
            char buf[8];
            for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
            f.write(buf, 8);
        };
        put_u64(m_);
        put_u64(k_);
        put_u64(n_target_);
        std::uint64_t eps_bits;
        std::memcpy(&eps_bits, &eps_, 8);
        put_u64(eps_bits);
        put_u64(seed_);
        const std::uint64_t nbytes = (m_ + 7) / 8;
        for (std::uint64_t byte = 0; byte < nbytes; ++byte) {
            const std::uint64_t word = bits_[byte / 8].load(std::memory_order_relaxed);
            const char b = static_cast<char>((word >> (8 * (byte % 8))) & 0xFF);
            f.write(&b, 1);
        }
        if (!f) throw std::runtime_error("write failed: " + path);
    }

    static BloomFilter load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + path);
        char magic[4];
        f.read(magic, 4);
        if (!f || std::memcmp(magic, "BFF1", 4) != 0)
            throw std::runtime_error(path + ": not a BFF1 snapshot");
        auto get_u64 = [&]() {
            char buf[8];
            f.read(buf, 8);
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i)
                v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
            return v;
        };
        const std::uint64_t m = get_u64();
        const std::uint64_t k = get_u64();
        const std::uint64_t n_target = get_u64();
        const std::uint64_t eps_bits = get_u64();
        double eps;
        std::memcpy(&eps, &eps_bits, 8);
        const std::uint64_t seed = get_u64();
        if (!f) throw std::runtime_error(path + ": truncated header");
        BloomFilter bf(m, static_cast<std::uint32_t>(k), n_target, eps, seed);
        const std::uint64_t nbytes = (m + 7) / 8;
        for (std::uint64_t byte = 0; byte < nbytes; ++byte) {
            char b;
            f.read(&b, 1);
            if (!f) throw std::runtime_error(path + ": truncated bit array");
            bf.bits_[byte / 8].fetch_or(
                static_cast<std::uint64_t>(static_cast<unsigned char>(b)) << (8 * (byte % 8)),
                std::memory_order_relaxed);
        }
        return bf;
    }

    BloomFilter(BloomFilter&&) = default;
    BloomFilter& operator=(BloomFilter&&) = default;
    BloomFilter(const BloomFilter&) = delete;
    BloomFilter& operator=(const BloomFilter&) = delete;

private:
    void derive(std::string_view item, std::uint64_t& h1, std::uint64_t& h2) const {
        h1 = hash_bytes(item, seed_);
        h2 = splitmix64(h1 ^ 0x9e3779b97f4a7c15ULL) | 1;  // odd, so strides cover bits
    }

    std::uint64_t m_;
    std::uint32_t k_;
    std::uint64_t n_target_;
    double eps_;
    std::uint64_t seed_;
    std::uint64_t words_ = 0;
    std::unique_ptr<std::atomic<std::uint64_t>[]> bits_;
};

}  // namespace curate
