#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/hash.hpp"

namespace curate {

/// MinHash banding parameters: `buckets` bands of `rows` hash minima each,
/// buckets*rows permutations total. (93, 15) is the budget-calibrated
/// production choice; (450, 20) is the classic reference scheme.
struct MinHashConfig {
    std::size_t ngram_size = 5;
    std::uint32_t buckets = 93;
    std::uint32_t rows = 15;
    std::uint64_t seed = 42;

    std::uint32_t permutations() const { return buckets * rows; }

    std::uint64_t tag() const {
        std::uint64_t h = splitmix64(static_cast<std::uint64_t>(ngram_size));
        h = splitmix64(h ^ buckets);
        h = splitmix64(h ^ rows);
        h = splitmix64(h ^ seed);
        return h;
    }
};

struct MinHashSignature {
    std::string doc_id;
    std::vector<std::uint64_t> minima;  // buckets*rows values
    std::uint64_t config_tag = 0;
};

/// Per-permutation minimum over the document's token shingles. Permutations
/// are simulated by the standard surrogate: buckets*rows independent 64-bit
/// hash functions derived from one seed (h_i(x) = mix(H(x) xor s_i)).
/// Documents shorter than ngram_size contribute one shingle of all their
/// tokens; empty documents are an error.
inline MinHashSignature minhash_signature(const Document& d, const MinHashConfig& cfg,
                                          const Tokenizer& tok = Tokenizer::unicode_words()) {
    const auto tokens = tok.tokens(d.text);
    if (tokens.empty())
        throw std::invalid_argument("minhash_signature: empty document " + d.id);

    std::vector<std::uint64_t> shingle_hashes;
    if (tokens.size() < cfg.ngram_size) {
        std::string key;
        for (std::size_t j = 0; j < tokens.size(); ++j) {
            if (j) key += '\x1f';
            key += tokens[j];
        }
        shingle_hashes.push_back(hash_bytes(key));
    } else {
        std::string key;
        for (std::size_t i = 0; i + cfg.ngram_size <= tokens.size(); ++i) {
            key.clear();
            for (std::size_t j = 0; j < cfg.ngram_size; ++j) {
                if (j) key += '\x1f';
                key += tokens[i + j];
            }
            shingle_hashes.push_back(hash_bytes(key));
        }
    }
    // distinct shingles only: MinHash is a set statistic
    std::sort(shingle_hashes.begin(), shingle_hashes.end());
    shingle_hashes.erase(std::unique(shingle_hashes.begin(), shingle_hashes.end()),
                         shingle_hashes.end());

    const std::uint32_t perms = cfg.permutations();
    SplitMixRng seeder(cfg.seed);
    MinHashSignature sig;
    sig.doc_id = d.id;
    sig.config_tag = cfg.tag();
    sig.minima.resize(perms, UINT64_MAX);
    std::vector<std::uint64_t> perm_seeds(perms);
    for (auto& s : perm_seeds) s = seeder.next();
    for (std::uint64_t base : shingle_hashes) {
        for (std::uint32_t i = 0; i < perms; ++i) {
            const std::uint64_t v = splitmix64(base ^ perm_seeds[i]);
            if (v < sig.minima[i]) sig.minima[i] = v;
        }
    }
    return sig;
}

/// Probability that two documents with Jaccard similarity s collide on at
/// least one full band: 1 - (1 - s^r)^b.
inline double minhash_detect_prob(double s, std::uint32_t buckets, std::uint32_t rows) {
    if (s < 0.0 || s > 1.0)
        throw std::invalid_argument("minhash_detect_prob: s must be in [0, 1]");
    return 1.0 - std::pow(1.0 - std::pow(s, static_cast<double>(rows)),
                          static_cast<double>(buckets));
}

/// Root-mean-square gap between two detection curves over the similarity
/// grid s = 0, 0.01, ..., 1.
inline double band_curve_distance(std::uint32_t b1, std::uint32_t r1, std::uint32_t b2,
                                  std::uint32_t r2) {
    double sum = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double s = static_cast<double>(i) / 100.0;
        const double d = minhash_detect_prob(s, b1, r1) - minhash_detect_prob(s, b2, r2);
        sum += d * d;
    }
    return std::sqrt(sum / 101.0);
}

struct BandCalibration {
    std::uint32_t buckets = 0;
    std::uint32_t rows = 0;
    double distance = 0.0;  // RMS gap to the reference curve over the grid
};

/// Cheapest banding scheme that mimics a reference detection curve: over all
/// (b, r) with b*r <= budget, minimize the sum of squared curve gaps on the
/// grid s = 0, 0.01, ..., 1. Ties break toward smaller b*r, then smaller r.
inline BandCalibration calibrate_bands(std::uint32_t budget, std::uint32_t ref_buckets,
                                       std::uint32_t ref_rows) {
    if (budget < 1) throw std::invalid_argument("calibrate_bands: budget must be >= 1");
    std::vector<double> ref(101);
    for (int i = 0; i <= 100; ++i)
        ref[static_cast<std::size_t>(i)] =
            minhash_detect_prob(static_cast<double>(i) / 100.0, ref_buckets, ref_rows);

    double best_sum = 0.0;
    std::uint64_t best_cost = 0;
    std::uint32_t best_b = 0, best_r = 0;
    for (std::uint32_t r = 1; r <= budget; ++r) {
        for (std::uint32_t b = 1; b <= budget / r; ++b) {
            double sum = 0.0;
            for (int i = 0; i <= 100; ++i) {
                const double d =
                    minhash_detect_prob(static_cast<double>(i) / 100.0, b, r) -
                    ref[static_cast<std::size_t>(i)];
                sum += d * d;
            }
            const std::uint64_t cost = static_cast<std::uint64_t>(b) * r;
            const bool better =
                best_b == 0 || sum < best_sum ||
                (sum == best_sum && (cost < best_cost || (cost == best_cost && r < best_r)));
            if (better) {
                best_sum = sum;
                best_cost = cost;
                best_b = b;
                best_r = r;
            }
        }
    }
    return {best_b, best_r, std::sqrt(best_sum / 101.0)};
}

struct DupCluster {
    std::vector<std::string> members;  // sorted document ids
    std::string retained;              // smallest member id

    bool operator==(const DupCluster&) const = default;
};

/// Candidate-link documents that agree on all rows of at least one bucket,
/// then take connected components. The lexicographically smallest id in each
/// cluster is retained.
inline std::vector<DupCluster> minhash_cluster(const std::vector<MinHashSignature>& signatures,
                                               const MinHashConfig& cfg) {
    const std::uint64_t tag = cfg.tag();
    for (const auto& s : signatures) {
        if (s.config_tag != tag)
            throw std::invalid_argument("minhash_cluster: signature " + s.doc_id +
                                        " was built with a different config");
        if (s.minima.size() != cfg.permutations())
            throw std::invalid_argument("minhash_cluster: signature size mismatch");
    }

    // union-find
    std::vector<std::size_t> parent(signatures.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    for (std::uint32_t band = 0; band < cfg.buckets; ++band) {
        std::unordered_map<std::uint64_t, std::size_t> first_in_bucket;
        for (std::size_t i = 0; i < signatures.size(); ++i) {
            std::uint64_t h = splitmix64(0x9276c5d1b0e2a4f3ULL ^ band);
            for (std::uint32_t row = 0; row < cfg.rows; ++row)
                h = splitmix64(h ^ signatures[i].minima[band * cfg.rows + row]);
            auto [it, inserted] = first_in_bucket.try_emplace(h, i);
            if (!inserted) unite(it->second, i);
        }
    }

    std::map<std::size_t, std::vector<std::string>> groups;
    for (std::size_t i = 0; i < signatures.size(); ++i)
        groups[find(i)].push_back(signatures[i].doc_id);

    std::vector<DupCluster> clusters;
    for (auto& [root, ids] : groups) {
        if (ids.size() < 2) continue;
        std::sort(ids.begin(), ids.end());
        DupCluster c;
        c.retained = ids.front();
        c.members = std::move(ids);
        clusters.push_back(std::move(c));
    }
    return clusters;
}

/// Remove every non-retained cluster member, keeping input order.
inline Corpus minhash_dedup(const Corpus& docs, const MinHashConfig& cfg,
                            const Tokenizer& tok = Tokenizer::unicode_words()) {
    std::vector<MinHashSignature> sigs;
    sigs.reserve(docs.size());
    for (const Document& d : docs) sigs.push_back(minhash_signature(d, cfg, tok));
    const auto clusters = minhash_cluster(sigs, cfg);
    std::set<std::string> drop;
    for (const auto& c : clusters)
        for (const auto& id : c.members)
            if (id != c.retained) drop.insert(id);
    Corpus out;
    for (const Document& d : docs)
        if (!drop.count(d.id)) out.push_back(d);
    return out;
}

}  // namespace curate
