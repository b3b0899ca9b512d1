#pragma once

#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "curate/hash.hpp"

namespace curate {

/// One web page. The atomic unit of every pipeline stage. Immutable by
/// convention once constructed; stages produce new Documents.
struct Document {
    std::string id;      // unique within a corpus, never empty after ingest
    std::string url;     // may be empty
    std::string text;    // UTF-8, no NUL bytes
    std::string source;  // provenance label used by the mixing stage
    std::map<std::string, std::string> metadata;  // WARC-style keys etc.

    bool operator==(const Document&) const = default;
};

using Corpus = std::vector<Document>;

struct Shard {
    std::size_t index = 0;
    Corpus documents;
};

// ---------------------------------------------------------------------------
// Tokenization
//
// Default mode follows Unicode word segmentation (UAX-29) for the scripts a
// web corpus mostly contains: letter/digit runs with the usual mid-word
// joiners ("don't" is one word, "stop-me" is two), Han and Hiragana as
// one token per character, Katakana as runs. Whitespace mode exists because
// it makes hand-computed oracles trivial. External mode is the hook for a
// model tokenizer.
// ---------------------------------------------------------------------------

enum class TokenizerMode { UnicodeWords, Whitespace, External };

struct TokenSpan {
    std::size_t begin = 0;  // byte offset, inclusive
    std::size_t end = 0;    // byte offset, exclusive
};

namespace detail {

struct Utf8Char {
    char32_t cp = 0;
    std::size_t size = 1;
};

inline Utf8Char decode_utf8(std::string_view s, std::size_t pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t i) {
        return i < s.size() && (static_cast<unsigned char>(s[i]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(pos + 1)) {
        char32_t cp = (b0 & 0x1Fu) << 6 | (static_cast<unsigned char>(s[pos + 1]) & 0x3Fu);
        return {cp, 2};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(pos + 1) && cont(pos + 2)) {
        char32_t cp = (b0 & 0x0Fu) << 12 | (static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(s[pos + 2]) & 0x3Fu);
        return {cp, 3};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
        char32_t cp = (b0 & 0x07u) << 18 | (static_cast<unsigned char>(s[pos + 1]) & 0x3Fu) << 12 |
                      (static_cast<unsigned char>(s[pos + 2]) & 0x3Fu) << 6 |
                      (static_cast<unsigned char>(s[pos + 3]) & 0x3Fu);
        return {cp, 4};
    }
    return {0xFFFD, 1};  // invalid byte, treated as punctuation
}

enum class CharClass {
    Letter,      // ALetter: forms multi-char words
    Digit,       // Numeric
    MidLetter,   // joins Letter-Letter only (colon, middle dot)
    MidNum,      // joins Digit-Digit only (comma)
    MidNumLet,   // joins either kind (period, apostrophes)
    Extend,      // combining marks, attach to what precedes
    Joiner,      // ExtendNumLet: underscore
    Ideograph,   // Han/Hiragana: one token per char
    Katakana,    // tokens are runs
    Other
};

inline bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

inline CharClass classify(char32_t cp) {
    if (cp < 0x80) {
        if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return CharClass::Letter;
        if (cp >= '0' && cp <= '9') return CharClass::Digit;
        if (cp == '\'' || cp == '.') return CharClass::MidNumLet;
        if (cp == ':') return CharClass::MidLetter;
        if (cp == ',') return CharClass::MidNum;
        if (cp == '_') return CharClass::Joiner;
        return CharClass::Other;
    }
    if (cp == 0x2019) return CharClass::MidNumLet;  // right single quote
    if (cp == 0x00B7 || cp == 0x05F4 || cp == 0x2027) return CharClass::MidLetter;
    if (in(cp, 0x0300, 0x036F) || in(cp, 0x1AB0, 0x1AFF) || in(cp, 0x20D0, 0x20FF) ||
        in(cp, 0xFE00, 0xFE0F))
        return CharClass::Extend;
    if (in(cp, 0x4E00, 0x9FFF) || in(cp, 0x3400, 0x4DBF) || in(cp, 0xF900, 0xFAFF) ||
        in(cp, 0x3040, 0x309F))
        return CharClass::Ideograph;
    if (in(cp, 0x30A0, 0x30FF) || in(cp, 0x31F0, 0x31FF)) return CharClass::Katakana;
    if (in(cp, 0x0660, 0x0669) || in(cp, 0x06F0, 0x06F9) || in(cp, 0x0966, 0x096F))
        return CharClass::Digit;
    // Punctuation, symbol, separator and space blocks; everything else
    // defaults to Letter so unlisted scripts still tokenize.
    if (cp == 0x00A0 || cp == 0x00AD || in(cp, 0x2000, 0x206F) || in(cp, 0x20A0, 0x2BFF) ||
        in(cp, 0x3000, 0x303F) || in(cp, 0xFE30, 0xFE4F) || in(cp, 0xFF01, 0xFF0F) ||
        in(cp, 0xFF1A, 0xFF20) || in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65) ||
        cp == 0x00D7 || cp == 0x00F7 || in(cp, 0x00A1, 0x00BF) || cp == 0xFFFD ||
        in(cp, 0x1F000, 0x1FFFF))
        return CharClass::Other;
    return CharClass::Letter;
}

inline std::vector<TokenSpan> unicode_word_spans(std::string_view text) {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    std::size_t word_begin = std::string_view::npos;
    bool word_numeric = false;  // class of the last solid char in the word

    auto flush = [&](std::size_t end) {
        if (word_begin != std::string_view::npos && end > word_begin)
            out.push_back({word_begin, end});
        word_begin = std::string_view::npos;
    };

    while (i < n) {
        const Utf8Char c = decode_utf8(text, i);
        const CharClass cls = classify(c.cp);
        switch (cls) {
            case CharClass::Letter:
            case CharClass::Digit:
            case CharClass::Joiner:
                if (word_begin == std::string_view::npos) word_begin = i;
                word_numeric = (cls == CharClass::Digit);
                i += c.size;
                break;
            case CharClass::Extend:
                // attaches to a preceding word; on its own it is skipped
                i += c.size;
                break;
            case CharClass::MidLetter:
            case CharClass::MidNum:
            case CharClass::MidNumLet: {
                // joins only between two solid chars of the same kind
                const bool kind_ok =
                    word_begin != std::string_view::npos &&
                    (cls == CharClass::MidNumLet ||
                     (cls == CharClass::MidLetter && !word_numeric) ||
                     (cls == CharClass::MidNum && word_numeric));
                if (kind_ok && i + c.size < n) {
                    const Utf8Char nxt = decode_utf8(text, i + c.size);
                    const CharClass ncls = classify(nxt.cp);
                    if ((ncls == CharClass::Letter && !word_numeric) ||
                        (ncls == CharClass::Digit && word_numeric)) {
                        i += c.size;  // absorbed into the word
                        break;
                    }
                }
                flush(i);
                i += c.size;
                break;
            }
            case CharClass::Ideograph:
                flush(i);
                out.push_back({i, i + c.size});
                i += c.size;
                break;
            case CharClass::Katakana: {
                flush(i);
                const std::size_t start = i;
                while (i < n) {
                    const Utf8Char k = decode_utf8(text, i);
                    if (classify(k.cp) != CharClass::Katakana) break;
                    i += k.size;
                }
                out.push_back({start, i});
                break;
            }
            case CharClass::Other:
                flush(i);
                i += c.size;
                break;
        }
    }
    flush(n);
    return out;
}

inline std::vector<TokenSpan> whitespace_spans(std::string_view text) {
    std::vector<TokenSpan> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) out.push_back({start, i});
    }
    return out;
}

}  // namespace detail

class Tokenizer {
public:
    using ExternalFn = std::function<std::vector<TokenSpan>(std::string_view)>;

    Tokenizer() : mode_(TokenizerMode::UnicodeWords) {}

    static Tokenizer unicode_words() { return Tokenizer(); }

    static Tokenizer whitespace() {
        Tokenizer t;
        t.mode_ = TokenizerMode::Whitespace;
        return t;
    }

    static Tokenizer external(ExternalFn fn) {
        Tokenizer t;
        t.mode_ = TokenizerMode::External;
        t.external_ = std::move(fn);
        return t;
    }

    TokenizerMode mode() const { return mode_; }

    std::vector<TokenSpan> spans(std::string_view text) const {
        switch (mode_) {
            case TokenizerMode::UnicodeWords: return detail::unicode_word_spans(text);
            case TokenizerMode::Whitespace: return detail::whitespace_spans(text);
            case TokenizerMode::External:
                if (!external_) throw std::logic_error("external tokenizer not set");
                return external_(text);
        }
        return {};
    }

    /// Token contents as views into `text`; caller keeps `text` alive.
    std::vector<std::string_view> tokens(std::string_view text) const {
        std::vector<std::string_view> out;
        for (const TokenSpan& s : spans(text)) out.push_back(text.substr(s.begin, s.end - s.begin));
        return out;
    }

    std::vector<std::string> token_strings(std::string_view text) const {
        std::vector<std::string> out;
        for (const TokenSpan& s : spans(text))
            out.emplace_back(text.substr(s.begin, s.end - s.begin));
        return out;
    }

    std::size_t count(std::string_view text) const { return spans(text).size(); }

private:
    TokenizerMode mode_;
    ExternalFn external_;
};

inline std::size_t count_tokens(const Document& doc, const Tokenizer& tok) {
    return tok.count(doc.text);
}

// ---------------------------------------------------------------------------
// Sharding
// ---------------------------------------------------------------------------

enum class ShardPolicy {
    RoundRobin,  // doc i -> shard i % n; sizes differ by at most 1
    HashOfId     // stable across runs and input order (per-document hash)
};

inline std::vector<Shard> shard_corpus(const Corpus& docs, std::size_t num_shards,
                                       ShardPolicy policy = ShardPolicy::RoundRobin) {
    if (num_shards < 1) throw std::invalid_argument("shard_corpus: num_shards must be >= 1");
    std::vector<Shard> shards(num_shards);
    for (std::size_t s = 0; s < num_shards; ++s) shards[s].index = s;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const std::size_t s = policy == ShardPolicy::RoundRobin
                                  ? i % num_shards
                                  : static_cast<std::size_t>(hash_bytes(docs[i].id) % num_shards);
        shards[s].documents.push_back(docs[i]);
    }
    return shards;
}

inline Corpus merge_shards(const std::vector<Shard>& shards) {
    Corpus out;
    for (const Shard& s : shards)
        out.insert(out.end(), s.documents.begin(), s.documents.end());
    return out;
}

}  // namespace curate
