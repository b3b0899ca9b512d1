#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/hash.hpp"

namespace curate {

/// Anything that ranks documents, higher = better on the scorer's own scale.
class QualityScorer {
public:
    virtual ~QualityScorer() = default;
    virtual std::string name() const = 0;
    virtual double score(const Document& d) const = 0;
};

// ---------------------------------------------------------------------------
// Hashed unigram+bigram logistic classifier
// ---------------------------------------------------------------------------

struct ClassifierConfig {
    std::size_t bucket_count = 1u << 21;
    bool use_bigrams = true;  // feature orders {1} or {1, 2}
    std::size_t epochs = 5;
    double learning_rate = 0.1;
    std::uint64_t seed = 42;
    Tokenizer tokenizer = Tokenizer::unicode_words();
};

class NgramClassifier {
public:
    NgramClassifier() = default;
    NgramClassifier(std::size_t bucket_count, bool use_bigrams,
                    Tokenizer tok = Tokenizer::unicode_words())
        : bucket_count_(bucket_count),
          use_bigrams_(use_bigrams),
          weights_(bucket_count, 0.0),
          tokenizer_(std::move(tok)) {}

    std::size_t bucket_count() const { return bucket_count_; }
    bool use_bigrams() const { return use_bigrams_; }
    double bias() const { return bias_; }

    /// Sparse hashed feature counts of a text: unigrams and (optionally)
    /// bigrams, each bucketed by a stable 64-bit hash.
    std::vector<std::pair<std::uint32_t, double>> features(std::string_view text) const {
        const auto tokens = tokenizer_.tokens(text);
        std::unordered_map<std::uint32_t, double> counts;
        for (const auto& t : tokens)
            ++counts[static_cast<std::uint32_t>(hash_bytes(t, kUnigramSalt) % bucket_count_)];
        if (use_bigrams_ && tokens.size() >= 2) {
            std::string big;
            for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
                big.assign(tokens[i]);
                big += '\x1f';
                big += tokens[i + 1];
                ++counts[static_cast<std::uint32_t>(hash_bytes(big, kBigramSalt) % bucket_count_)];
            }
        }
        double total = 0.0;
        for (const auto& [idx, c] : counts) total += c;
        std::vector<std::pair<std::uint32_t, double>> out(counts.begin(), counts.end());
        if (total > 0)
            for (auto& [idx, c] : out) c /= total;  // mean-normalized bag of features
        std::sort(out.begin(), out.end());
        return out;
    }

    double decision_value(const Document& d) const {
        double z = bias_;
        for (const auto& [idx, x] : features(d.text)) z += weights_[idx] * x;
        return z;
    }

    /// P(positive) via the logistic link; an empty document scores
    /// sigmoid(bias).
    double score(const Document& d) const { return sigmoid(decision_value(d)); }

    static double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

    // --- model file format ("NGC1", little-endian) -----------------------
    //   bytes 0..3   magic "NGC1"
    //   bytes 4..11  bucket_count (u64)
    //   bytes 12..19 feature orders (u64: 1 = unigrams, 2 = unigrams+bigrams)
    //   bytes 20..27 bias (IEEE-754 double)
    //   bytes 28..   bucket_count doubles of weights

    void save(const std::string& path) const {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + path + " for writing");
        f.write("NGC1", 4);
        auto put_u64 = [&](std::uint64_t v) {
            char buf[8];
            for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
            f.write(buf, 8);
        };
        put_u64(bucket_count_);
        put_u64(use_bigrams_ ? 2 : 1);
        std::uint64_t bias_bits;
        std::memcpy(&bias_bits, &bias_, 8);
        put_u64(bias_bits);
        for (double w : weights_) {
            std::uint64_t bits;
            std::memcpy(&bits, &w, 8);
            put_u64(bits);
        }
        if (!f) throw std::runtime_error("write failed: " + path);
    }

    static NgramClassifier load(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open " + path);
        char magic[4];
        f.read(magic, 4);
        if (!f || std::memcmp(magic, "NGC1", 4) != 0)
            throw std::runtime_error(path + ": not an NGC1 model file");
        auto get_u64 = [&]() {
            char buf[8];
            f.read(buf, 8);
            std::uint64_t v = 0;
            for (int i = 0; i < 8; ++i)
                v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
            return v;
        };
        const std::uint64_t buckets = get_u64();
        const std::uint64_t orders = get_u64();
        const std::uint64_t bias_bits = get_u64();
        if (!f || (orders != 1 && orders != 2))
            throw std::runtime_error(path + ": bad NGC1 header");
        NgramClassifier m(buckets, orders == 2);
        std::memcpy(&m.bias_, &bias_bits, 8);
        for (std::uint64_t i = 0; i < buckets; ++i) {
            const std::uint64_t bits = get_u64();
            std::memcpy(&m.weights_[i], &bits, 8);
        }
        if (!f) throw std::runtime_error(path + ": truncated weights");
        return m;
    }

private:
    friend struct ClassifierTrainer;
    static constexpr std::uint64_t kUnigramSalt = 0x11;
    static constexpr std::uint64_t kBigramSalt = 0x22;

    std::size_t bucket_count_ = 0;
    bool use_bigrams_ = true;
    std::vector<double> weights_;
    double bias_ = 0.0;
    Tokenizer tokenizer_ = Tokenizer::unicode_words();
};

struct TrainReport {
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double train_accuracy = 0.0;
};

struct ClassifierTrainer {
    /// Logistic regression by seeded single-threaded SGD over hashed n-gram
    /// counts; identical seed and data give identical weights.
    static NgramClassifier train(const Corpus& pos, const Corpus& neg,
                                 const ClassifierConfig& cfg, TrainReport* report = nullptr) {
        if (pos.empty() || neg.empty())
            throw std::invalid_argument("train_classifier: both classes must be non-empty");
        NgramClassifier model(cfg.bucket_count, cfg.use_bigrams, cfg.tokenizer);

        struct Example {
            std::vector<std::pair<std::uint32_t, double>> x;
            int y;
        };
        std::vector<Example> examples;
        examples.reserve(pos.size() + neg.size());
        for (const Document& d : pos) examples.push_back({model.features(d.text), 1});
        for (const Document& d : neg) examples.push_back({model.features(d.text), 0});

        std::vector<std::size_t> order(examples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

        const std::size_t total_steps = cfg.epochs * examples.size();
        std::size_t step = 0;
        for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
            SplitMixRng rng(cfg.seed + epoch);
            deterministic_shuffle(order, rng);
            for (std::size_t idx : order) {
                const Example& ex = examples[idx];
                double z = model.bias_;
                for (const auto& [j, x] : ex.x) z += model.weights_[j] * x;
                const double g = NgramClassifier::sigmoid(z) - ex.y;
                const double lr = cfg.learning_rate *
                                  (1.0 - static_cast<double>(step) /
                                             static_cast<double>(total_steps));
                for (const auto& [j, x] : ex.x) model.weights_[j] -= lr * g * x;
                model.bias_ -= lr * g;
                ++step;
            }
        }

        if (report) {
            report->positives = pos.size();
            report->negatives = neg.size();
            std::size_t correct = 0;
            for (const Example& ex : examples) {
                double z = model.bias_;
                for (const auto& [j, x] : ex.x) z += model.weights_[j] * x;
                if ((z > 0.0) == (ex.y == 1)) ++correct;
            }
            report->train_accuracy =
                static_cast<double>(correct) / static_cast<double>(examples.size());
        }
        return model;
    }
};

inline NgramClassifier train_classifier(const Corpus& pos, const Corpus& neg,
                                        const ClassifierConfig& cfg = {},
                                        TrainReport* report = nullptr) {
    return ClassifierTrainer::train(pos, neg, cfg, report);
}

inline double score_document(const NgramClassifier& model, const Document& d) {
    return model.score(d);
}

class ClassifierScorer final : public QualityScorer {
public:
    explicit ClassifierScorer(NgramClassifier model) : model_(std::move(model)) {}
    std::string name() const override { return "ngram_classifier"; }
    double score(const Document& d) const override { return model_.score(d); }

private:
    NgramClassifier model_;
};

// ---------------------------------------------------------------------------
// Percentile thresholding and filtering
// ---------------------------------------------------------------------------

/// Threshold t with |{s >= t}| >= ceil(keep_fraction * N); ties at t are all
/// kept, so the realized fraction can exceed the nominal one.
inline double percentile_threshold(const std::vector<double>& scores, double keep_fraction) {
    if (scores.empty()) throw std::invalid_argument("percentile_threshold: empty scores");
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("percentile_threshold: keep_fraction must be in (0, 1]");
    const auto want = static_cast<std::size_t>(
        std::ceil(keep_fraction * static_cast<double>(scores.size())));
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return sorted[want - 1];
}

struct QualityFilterResult {
    Corpus corpus;
    double threshold = 0.0;
    std::size_t scorer_errors = 0;
};

/// Two passes: score everything, derive the percentile threshold, keep
/// documents scoring at or above it. Input order is preserved; documents the
/// scorer fails on are dropped and counted.
inline QualityFilterResult quality_filter(const Corpus& docs, const QualityScorer& scorer,
                                          double keep_fraction) {
    QualityFilterResult r;
    if (docs.empty()) return r;
    std::vector<double> scores;
    std::vector<bool> ok(docs.size(), false);
    scores.reserve(docs.size());
    std::vector<double> per_doc(docs.size(), 0.0);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        try {
            per_doc[i] = scorer.score(docs[i]);
            ok[i] = true;
            scores.push_back(per_doc[i]);
        } catch (const std::exception&) {
            ++r.scorer_errors;
        }
    }
    if (scores.empty()) return r;
    r.threshold = percentile_threshold(scores, keep_fraction);
    for (std::size_t i = 0; i < docs.size(); ++i)
        if (ok[i] && per_doc[i] >= r.threshold) r.corpus.push_back(docs[i]);
    return r;
}

// ---------------------------------------------------------------------------
// Add-k n-gram language model (reference perplexity scorer)
// ---------------------------------------------------------------------------

class NgramLm {
public:
    explicit NgramLm(std::size_t order = 3, double add_k = 0.1,
                     Tokenizer tok = Tokenizer::unicode_words())
        : order_(order), add_k_(add_k), tokenizer_(std::move(tok)) {
        if (order_ < 1) throw std::invalid_argument("NgramLm: order must be >= 1");
        if (!(add_k_ > 0.0)) throw std::invalid_argument("NgramLm: add_k must be > 0");
    }

    void fit(const Corpus& docs) {
        for (const Document& d : docs) add_text(d.text);
    }

    void add_text(std::string_view text) {
        const auto tokens = tokenizer_.tokens(text);
        std::vector<std::uint32_t> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) {
            auto [it, inserted] = vocab_.try_emplace(std::string(t),
                                                     static_cast<std::uint32_t>(vocab_.size()));
            ids.push_back(it->second);
        }
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const std::size_t ctx_len = std::min(order_ - 1, i);
            const std::uint64_t ctx = context_key(ids, i - ctx_len, ctx_len);
            auto& slot = counts_[ctx];
            ++slot.total;
            ++slot.next[ids[i]];
        }
    }

    std::size_t vocab_size() const { return vocab_.size(); }

    /// exp of the mean negative log-probability of the document's tokens
    /// under the add-k smoothed model. Empty documents are an error.
    double perplexity(const Document& d) const {
        const auto tokens = tokenizer_.tokens(d.text);
        if (tokens.empty()) throw std::invalid_argument("perplexity: empty document " + d.id);
        std::vector<std::uint32_t> ids;
        ids.reserve(tokens.size());
        for (const auto& t : tokens) {
            auto it = vocab_.find(std::string(t));
            ids.push_back(it == vocab_.end() ? kUnknown : it->second);
        }
        const double v = static_cast<double>(vocab_.size()) + 1.0;  // vocabulary + unknown
        double nll = 0.0;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const std::size_t ctx_len = std::min(order_ - 1, i);
            const std::uint64_t ctx = context_key(ids, i - ctx_len, ctx_len);
            double count = 0.0, total = 0.0;
            if (auto it = counts_.find(ctx); it != counts_.end()) {
                total = static_cast<double>(it->second.total);
                if (ids[i] != kUnknown)
                    if (auto jt = it->second.next.find(ids[i]); jt != it->second.next.end())
                        count = static_cast<double>(jt->second);
            }
            nll -= std::log((count + add_k_) / (total + add_k_ * v));
        }
        return std::exp(nll / static_cast<double>(ids.size()));
    }

private:
    static constexpr std::uint32_t kUnknown = UINT32_MAX;

    static std::uint64_t context_key(const std::vector<std::uint32_t>& ids, std::size_t begin,
                                     std::size_t len) {
        std::uint64_t h = splitmix64(0xC0417E87ULL ^ len);
        for (std::size_t j = 0; j < len; ++j) h = splitmix64(h ^ ids[begin + j]);
        return h;
    }

    struct ContextCounts {
        std::uint64_t total = 0;
        std::unordered_map<std::uint32_t, std::uint64_t> next;
    };

    std::size_t order_;
    double add_k_;
    Tokenizer tokenizer_;
    std::unordered_map<std::string, std::uint32_t> vocab_;
    std::unordered_map<std::uint64_t, ContextCounts> counts_;
};

inline double perplexity_score(const NgramLm& lm, const Document& d) {
    return lm.perplexity(d);
}

/// Adapter: low perplexity is good, so the scorer negates it.
class PerplexityScorer final : public QualityScorer {
public:
    explicit PerplexityScorer(std::shared_ptr<const NgramLm> lm) : lm_(std::move(lm)) {}
    std::string name() const override { return "lm_perplexity"; }
    double score(const Document& d) const override { return -lm_->perplexity(d); }

private:
    std::shared_ptr<const NgramLm> lm_;
};

}  // namespace curate
