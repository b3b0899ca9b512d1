#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "curate/corpus.hpp"
#include "curate/hash.hpp"

namespace curate {

enum class DedupKey { RawText, NormalizedText };

namespace detail {

/// Lowercase (ASCII) + collapse whitespace runs to one space + trim.
inline std::string normalize_for_dedup(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending = !out.empty();
            continue;
        }
        if (pending) {
            out += ' ';
            pending = false;
        }
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

}  // namespace detail

/// Keep the first occurrence (in input order) of each distinct text.
inline Corpus exact_dedup(const Corpus& docs, DedupKey key = DedupKey::RawText) {
    std::unordered_set<std::string> seen;
    Corpus out;
    for (const Document& d : docs) {
        std::string k = key == DedupKey::RawText ? d.text : detail::normalize_for_dedup(d.text);
        if (seen.insert(std::move(k)).second) out.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Repeated-substring removal
//
// Every repeated token run of length >= min_run is a union of repeated
// min_run-sized windows, so scanning fixed windows in corpus order finds
// exactly the positions the definition covers: a token is excised iff it
// lies inside a window whose content already occurred at an earlier
// position. First occurrences survive by construction.
// ---------------------------------------------------------------------------

struct SuffixDedupConfig {
    std::size_t min_run = 50;  // tokens
    Tokenizer tokenizer = Tokenizer::unicode_words();
    std::uint64_t max_total_tokens = 100'000'000;  // desk-scale memory bound
};

namespace detail {

struct WindowRef {
    std::uint32_t doc = 0;
    std::uint32_t offset = 0;  // token offset within doc
};

}  // namespace detail

inline Corpus suffix_dedup(const Corpus& docs, const SuffixDedupConfig& cfg = {}) {
    if (cfg.min_run < 1) throw std::invalid_argument("suffix_dedup: min_run must be >= 1");

    // tokenize everything up front; windows never span documents
    std::vector<std::vector<TokenSpan>> spans(docs.size());
    std::vector<std::vector<std::uint32_t>> ids(docs.size());
    std::unordered_map<std::string_view, std::uint32_t> vocab;
    std::uint64_t total_tokens = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        spans[d] = cfg.tokenizer.spans(docs[d].text);
        total_tokens += spans[d].size();
        if (total_tokens > cfg.max_total_tokens)
            throw std::runtime_error(
                "suffix_dedup: corpus exceeds the in-memory token budget; shard the corpus and "
                "run per shard");
        ids[d].reserve(spans[d].size());
        for (const TokenSpan& s : spans[d]) {
            const std::string_view tok =
                std::string_view(docs[d].text).substr(s.begin, s.end - s.begin);
            auto [it, inserted] =
                vocab.try_emplace(tok, static_cast<std::uint32_t>(vocab.size()));
            ids[d].push_back(it->second);
        }
    }

    // first-occurrence table of min_run-sized windows, with verification so
    // 64-bit hash collisions cannot excise innocent text
    std::unordered_map<std::uint64_t, std::vector<detail::WindowRef>> first_seen;
    std::vector<std::vector<char>> covered(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) covered[d].assign(ids[d].size(), 0);

    auto window_equal = [&](const detail::WindowRef& a, std::size_t doc_b, std::size_t off_b) {
        const auto& va = ids[a.doc];
        const auto& vb = ids[doc_b];
        for (std::size_t j = 0; j < cfg.min_run; ++j)
            if (va[a.offset + j] != vb[off_b + j]) return false;
        return true;
    };

    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto& v = ids[d];
        if (v.size() < cfg.min_run) continue;
        for (std::size_t w = 0; w + cfg.min_run <= v.size(); ++w) {
            std::uint64_t h = 0x51a3c7e9d2b40861ULL;
            for (std::size_t j = 0; j < cfg.min_run; ++j) h = splitmix64(h ^ v[w + j]);
            auto& bucket = first_seen[h];
            bool repeat = false;
            for (const auto& ref : bucket) {
                if (window_equal(ref, d, w)) {
                    repeat = true;
                    break;
                }
            }
            if (repeat) {
                for (std::size_t j = 0; j < cfg.min_run; ++j) covered[d][w + j] = 1;
            } else {
                bucket.push_back({static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(w)});
            }
        }
    }

    // rebuild texts without the covered tokens
    Corpus out;
    out.reserve(docs.size());
    for (std::size_t d = 0; d < docs.size(); ++d) {
        Document doc = docs[d];
        const auto& cov = covered[d];
        if (std::find(cov.begin(), cov.end(), 1) != cov.end()) {
            const std::string& text = docs[d].text;
            std::string rebuilt;
            std::size_t last_kept = SIZE_MAX;
            for (std::size_t i = 0; i < spans[d].size(); ++i) {
                if (cov[i]) continue;
                if (last_kept == SIZE_MAX) {
                    if (i == 0) rebuilt.append(text, 0, spans[d][0].begin);
                } else if (last_kept + 1 == i) {
                    rebuilt.append(text, spans[d][last_kept].end,
                                   spans[d][i].begin - spans[d][last_kept].end);
                } else {
                    rebuilt += ' ';  // excision seam
                }
                rebuilt.append(text, spans[d][i].begin, spans[d][i].end - spans[d][i].begin);
                last_kept = i;
            }
            if (last_kept != SIZE_MAX && last_kept + 1 == spans[d].size())
                rebuilt.append(text, spans[d][last_kept].end,
                               text.size() - spans[d][last_kept].end);
            doc.text = std::move(rebuilt);
        }
        out.push_back(std::move(doc));
    }
    return out;
}

}  // namespace curate
