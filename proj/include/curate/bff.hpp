#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "curate/bloom.hpp"
#include "curate/corpus.hpp"

namespace curate {

/// Paragraph + document Bloom dedup parameters. The defaults are the
/// large-scale production choice: n-gram size 13/13, containment threshold
/// 0.8, false-positive rate 0.01.
struct BffConfig {
    std::size_t min_ngram_size = 13;
    std::size_t max_ngram_size = 13;
    double threshold = 0.8;
    double eps = 0.01;
    std::uint64_t expected_tokens = 1ULL << 22;
    Tokenizer tokenizer = Tokenizer::unicode_words();

    void validate() const {
        if (min_ngram_size < 1 || min_ngram_size > max_ngram_size)
            throw std::invalid_argument("BffConfig: need 1 <= min_ngram_size <= max_ngram_size");
        if (!(threshold > 0.0 && threshold <= 1.0))
            throw std::invalid_argument("BffConfig: threshold must be in (0, 1]");
        if (!(eps > 0.0 && eps < 1.0))
            throw std::invalid_argument("BffConfig: eps must be in (0, 1)");
    }

    BloomFilter make_filter(std::uint64_t seed = 0) const {
        validate();
        return BloomFilter::sized_for(expected_tokens, eps, seed);
    }
};

struct BffOutcome {
    std::optional<Document> document;          // nullopt when the document was removed
    std::vector<std::size_t> removed_paragraphs;  // indices into the '\n' split
    std::uint64_t total_ngrams = 0;
    std::uint64_t contained_ngrams = 0;

    bool document_removed() const { return !document.has_value(); }
};

namespace detail {

inline std::string ngram_key(const std::vector<std::string_view>& tokens, std::size_t begin,
                             std::size_t len) {
    std::string key;
    for (std::size_t j = 0; j < len; ++j) {
        if (j) key += '\x1f';
        key += tokens[begin + j];
    }
    return key;
}

}  // namespace detail

/// One document through the paragraph+document dedup pass.
///
/// Paragraphs are the '\n'-split pieces of the text. Per paragraph with t
/// tokens:
///   - t < min_ngram_size: left as is, counters untouched;
///   - min <= t <= max: the whole paragraph is a single n-gram; it counts
///     toward total, and if already present it is removed from the document
///     and counts toward contained, otherwise it is inserted;
///   - t > max: every max-sized window counts toward total and is
///     membership-checked; when more than `threshold` of the windows are
///     contained the paragraph is removed, otherwise all non-contained
///     windows are inserted.
/// After all paragraphs, the document itself is removed when
/// contained/total > threshold. Inserted n-grams persist either way.
inline BffOutcome bff_process_document(const Document& d, BloomFilter& filter,
                                       const BffConfig& cfg) {
    cfg.validate();
    BffOutcome out;

    std::vector<std::string_view> paragraphs;
    {
        std::string_view text = d.text;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= text.size(); ++i) {
            if (i == text.size() || text[i] == '\n') {
                paragraphs.push_back(text.substr(start, i - start));
                start = i + 1;
            }
        }
    }

    std::vector<bool> keep(paragraphs.size(), true);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
        const auto tokens = cfg.tokenizer.tokens(paragraphs[p]);
        const std::size_t t = tokens.size();
        if (t < cfg.min_ngram_size) continue;

        if (t <= cfg.max_ngram_size) {
            ++out.total_ngrams;
            const std::string key = detail::ngram_key(tokens, 0, t);
            if (filter.query(key)) {
                ++out.contained_ngrams;
                keep[p] = false;
                out.removed_paragraphs.push_back(p);
            } else {
                filter.insert(key);
            }
            continue;
        }

        // long paragraph: sliding max-sized windows, insert only when kept
        const std::size_t windows = t - cfg.max_ngram_size + 1;
        std::vector<std::string> keys(windows);
        std::vector<bool> contained(windows, false);
        std::size_t hits = 0;
        for (std::size_t w = 0; w < windows; ++w) {
            keys[w] = detail::ngram_key(tokens, w, cfg.max_ngram_size);
            if (filter.query(keys[w])) {
                contained[w] = true;
                ++hits;
            }
        }
        out.total_ngrams += windows;
        out.contained_ngrams += hits;
        if (static_cast<double>(hits) > cfg.threshold * static_cast<double>(windows)) {
            keep[p] = false;
            out.removed_paragraphs.push_back(p);
        } else {
            for (std::size_t w = 0; w < windows; ++w)
                if (!contained[w]) filter.insert(keys[w]);
        }
    }

    if (out.total_ngrams > 0 &&
        static_cast<double>(out.contained_ngrams) >
            cfg.threshold * static_cast<double>(out.total_ngrams)) {
        return out;  // document removed; inserted n-grams stay in the filter
    }

    Document result = d;
    if (!out.removed_paragraphs.empty()) {
        std::string text;
        bool first = true;
        for (std::size_t p = 0; p < paragraphs.size(); ++p) {
            if (!keep[p]) continue;
            if (!first) text += '\n';
            text.append(paragraphs[p]);
            first = false;
        }
        result.text = std::move(text);
    }
    out.document = std::move(result);
    return out;
}

struct BffCorpusResult {
    Corpus corpus;
    std::vector<BffOutcome> outcomes;  // one per input document, in order
    std::size_t documents_removed = 0;
    std::size_t paragraphs_removed = 0;
};

/// Run the dedup pass over a corpus in order against a shared filter.
inline BffCorpusResult bff_process_corpus(const Corpus& docs, BloomFilter& filter,
                                          const BffConfig& cfg) {
    BffCorpusResult r;
    r.outcomes.reserve(docs.size());
    for (const Document& d : docs) {
        BffOutcome o = bff_process_document(d, filter, cfg);
        r.paragraphs_removed += o.removed_paragraphs.size();
        if (o.document_removed()) {
            ++r.documents_removed;
        } else {
            r.corpus.push_back(*o.document);
        }
        r.outcomes.push_back(std::move(o));
    }
    return r;
}

}  // namespace curate
