#pragma once

#include <algorithm>
#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "curate/corpus.hpp"

namespace curate {

/// One benchmark sample: either free text or a question with options.
struct EvalSample {
    std::string id;
    std::string text;                  // free-text form
    std::string question;              // QA form
    std::vector<std::string> options;  // non-empty when question is set

    /// Text used for token-overlap measurement.
    std::string overlap_text() const {
        if (!text.empty()) return text;
        std::string out = question;
        for (const auto& o : options) {
            out += ' ';
            out += o;
        }
        return out;
    }

    static EvalSample from_json(const nlohmann::json& j) {
        EvalSample s;
        s.id = j.value("id", "");
        s.text = j.value("text", "");
        s.question = j.value("question", "");
        if (j.contains("options"))
            for (const auto& o : j["options"]) s.options.push_back(o.get<std::string>());
        if (s.text.empty() && s.question.empty())
            throw std::runtime_error("eval sample needs \"text\" or \"question\"");
        if (!s.question.empty() && s.options.empty())
            throw std::runtime_error("eval sample with a question needs non-empty options");
        return s;
    }
};

// ---------------------------------------------------------------------------
// Token n-gram overlap index
// ---------------------------------------------------------------------------

/// Exact membership structure over every contiguous n-token gram of the
/// indexed corpus. Exact by default (stored grams, no false positives in
/// either direction); the Bloom-backed variant in the dedup module can stand
/// in for very large corpora at the cost of overcounting contamination.
class OverlapIndex {
public:
    explicit OverlapIndex(std::size_t n = 10, Tokenizer tok = Tokenizer::unicode_words())
        : n_(n), tokenizer_(std::move(tok)) {
        if (n_ < 1) throw std::invalid_argument("OverlapIndex: n must be >= 1");
    }

    std::size_t gram_length() const { return n_; }
    const Tokenizer& tokenizer() const { return tokenizer_; }
    std::size_t size() const { return grams_.size(); }

    void add_document(const Document& d) {
        const auto tokens = tokenizer_.tokens(d.text);
        if (tokens.size() < n_) return;
        for (std::size_t i = 0; i + n_ <= tokens.size(); ++i) grams_.insert(key(tokens, i));
    }

    bool contains_gram(const std::vector<std::string_view>& tokens, std::size_t begin) const {
        return grams_.count(key(tokens, begin)) > 0;
    }

private:
    std::string key(const std::vector<std::string_view>& tokens, std::size_t begin) const {
        std::string k;
        for (std::size_t j = 0; j < n_; ++j) {
            if (j) k += '\x1f';
            k += tokens[begin + j];
        }
        return k;
    }

    std::size_t n_;
    Tokenizer tokenizer_;
    std::unordered_set<std::string> grams_;
};

inline OverlapIndex build_overlap_index(const Corpus& corpus, std::size_t n = 10,
                                        const Tokenizer& tok = Tokenizer::unicode_words()) {
    OverlapIndex idx(n, tok);
    for (const Document& d : corpus) idx.add_document(d);
    return idx;
}

enum class ContaminationLabel { Dirty, Partial, Clean };

inline const char* to_string(ContaminationLabel l) {
    switch (l) {
        case ContaminationLabel::Dirty: return "dirty";
        case ContaminationLabel::Partial: return "partial";
        case ContaminationLabel::Clean: return "clean";
    }
    return "?";
}

struct SampleContamination {
    std::string id;
    std::size_t tokens = 0;
    std::size_t contaminated_tokens = 0;
    double fraction = 0.0;
    ContaminationLabel label = ContaminationLabel::Clean;
};

struct ContaminationReport {
    std::vector<SampleContamination> samples;
    double percent_dirty = 0.0;    // fraction > 0.8
    double percent_partial = 0.0;
    double percent_clean = 0.0;    // fraction < 0.2

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["samples"] = nlohmann::json::array();
        for (const auto& s : samples)
            j["samples"].push_back({{"id", s.id},
                                    {"tokens", s.tokens},
                                    {"contaminated_tokens", s.contaminated_tokens},
                                    {"fraction", s.fraction},
                                    {"label", to_string(s.label)}});
        j["percent_dirty"] = percent_dirty;
        j["percent_partial"] = percent_partial;
        j["percent_clean"] = percent_clean;
        return j;
    }
};

/// A token is contaminated iff it lies inside a run of >= n consecutive
/// tokens whose every constituent n-gram is present in the index. Dirty
/// means more than 80% of the sample's tokens are contaminated, clean means
/// less than 20%.
inline ContaminationReport contamination_fractions(const std::vector<EvalSample>& evalset,
                                                   const OverlapIndex& idx) {
    ContaminationReport report;
    const std::size_t n = idx.gram_length();
    std::size_t dirty = 0, partial = 0, clean = 0;
    for (const EvalSample& sample : evalset) {
        SampleContamination sc;
        sc.id = sample.id;
        const std::string text = sample.overlap_text();
        const auto tokens = idx.tokenizer().tokens(text);
        sc.tokens = tokens.size();
        if (tokens.size() >= n) {
            std::vector<char> covered(tokens.size(), 0);
            std::size_t run_begin = 0;
            bool in_run = false;
            const std::size_t gram_count = tokens.size() - n + 1;
            for (std::size_t g = 0; g <= gram_count; ++g) {
                const bool hit = g < gram_count && idx.contains_gram(tokens, g);
                if (hit && !in_run) {
                    run_begin = g;
                    in_run = true;
                } else if (!hit && in_run) {
                    // grams [run_begin, g) cover tokens [run_begin, g-1+n)
                    for (std::size_t t = run_begin; t < g - 1 + n; ++t) covered[t] = 1;
                    in_run = false;
                }
            }
            for (char c : covered)
                if (c) ++sc.contaminated_tokens;
        }
        sc.fraction = sc.tokens == 0 ? 0.0
                                     : static_cast<double>(sc.contaminated_tokens) /
                                           static_cast<double>(sc.tokens);
        if (sc.fraction > 0.8) {
            sc.label = ContaminationLabel::Dirty;
            ++dirty;
        } else if (sc.fraction < 0.2) {
            sc.label = ContaminationLabel::Clean;
            ++clean;
        } else {
            sc.label = ContaminationLabel::Partial;
            ++partial;
        }
        report.samples.push_back(std::move(sc));
    }
    const double total = static_cast<double>(report.samples.size());
    if (total > 0) {
        report.percent_dirty = 100.0 * static_cast<double>(dirty) / total;
        report.percent_partial = 100.0 * static_cast<double>(partial) / total;
        report.percent_clean = 100.0 * static_cast<double>(clean) / total;
    }
    return report;
}

// ---------------------------------------------------------------------------
// Question/option flagging and excision
// ---------------------------------------------------------------------------

struct TextSpan {
    std::size_t begin = 0;
    std::size_t end = 0;  // byte offsets into the original document text

    bool operator==(const TextSpan&) const = default;
};

struct QaMatch {
    std::string sample_id;
    std::vector<TextSpan> sentence_spans;  // occurrences of the question's last sentence
    std::vector<TextSpan> option_spans;    // occurrences of matching options
};

namespace detail {

/// Whitespace-collapsed copy of `text` plus, per normalized char, the byte
/// range it came from. A single ' ' stands for any whitespace run.
struct NormalizedView {
    std::string text;
    std::vector<std::size_t> begin;  // original start of normalized char i
    std::vector<std::size_t> end;    // original end (exclusive)

    static NormalizedView build(std::string_view original, bool fold_case) {
        NormalizedView v;
        bool pending_ws = false;
        std::size_t ws_start = 0;
        for (std::size_t i = 0; i < original.size(); ++i) {
            const char c = original[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                if (!pending_ws) ws_start = i;
                pending_ws = true;
                continue;
            }
            if (pending_ws && !v.text.empty()) {
                v.text += ' ';
                v.begin.push_back(ws_start);
                v.end.push_back(i);
            }
            pending_ws = false;
            v.text += fold_case ? static_cast<char>(std::tolower(static_cast<unsigned char>(c)))
                                : c;
            v.begin.push_back(i);
            v.end.push_back(i + 1);
        }
        return v;
    }
};

inline std::string normalize_needle(std::string_view s, bool fold_case) {
    std::string out;
    bool pending = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending = !out.empty();
            continue;
        }
        if (pending) out += ' ';
        pending = false;
        out += fold_case ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : c;
    }
    return out;
}

inline std::vector<TextSpan> find_all_spans(const NormalizedView& hay, const std::string& needle) {
    std::vector<TextSpan> spans;
    if (needle.empty()) return spans;
    std::size_t pos = 0;
    while ((pos = hay.text.find(needle, pos)) != std::string::npos) {
        spans.push_back({hay.begin[pos], hay.end[pos + needle.size() - 1]});
        ++pos;
    }
    return spans;
}

}  // namespace detail

/// Last sentence of a question: final non-empty piece after splitting on
/// '.', '?' or '!' followed by whitespace or end of string.
inline std::string last_sentence(std::string_view question) {
    std::vector<std::pair<std::size_t, std::size_t>> pieces;
    std::size_t start = 0;
    for (std::size_t i = 0; i < question.size(); ++i) {
        const char c = question[i];
        const bool terminator =
            (c == '.' || c == '?' || c == '!') &&
            (i + 1 == question.size() ||
             std::isspace(static_cast<unsigned char>(question[i + 1])));
        if (terminator) {
            pieces.push_back({start, i + 1});
            start = i + 1;
        }
    }
    if (start < question.size()) pieces.push_back({start, question.size()});
    for (auto it = pieces.rbegin(); it != pieces.rend(); ++it) {
        std::string_view piece = question.substr(it->first, it->second - it->first);
        while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.front())))
            piece.remove_prefix(1);
        while (!piece.empty() && std::isspace(static_cast<unsigned char>(piece.back())))
            piece.remove_suffix(1);
        if (!piece.empty()) return std::string(piece);
    }
    return {};
}

struct FlagStats {
    std::size_t samples_skipped = 0;  // empty last sentence after splitting
};

/// Flag the document for each sample whose question's last sentence AND at
/// least one option occur in the text (whitespace-normalized matching,
/// case-sensitive unless `case_insensitive`). The rule favors recall.
inline std::vector<QaMatch> flag_qa_overlap(const Document& d,
                                            const std::vector<EvalSample>& samples,
                                            bool case_insensitive = false,
                                            FlagStats* stats = nullptr) {
    std::vector<QaMatch> matches;
    const auto view = detail::NormalizedView::build(d.text, case_insensitive);
    for (const EvalSample& s : samples) {
        if (s.question.empty()) continue;
        const std::string sentence =
            detail::normalize_needle(last_sentence(s.question), case_insensitive);
        if (sentence.empty()) {
            if (stats) ++stats->samples_skipped;
            continue;
        }
        const auto sentence_spans = detail::find_all_spans(view, sentence);
        if (sentence_spans.empty()) continue;
        std::vector<TextSpan> option_spans;
        for (const std::string& opt : s.options) {
            const std::string needle = detail::normalize_needle(opt, case_insensitive);
            if (needle.empty()) continue;
            const auto spans = detail::find_all_spans(view, needle);
            option_spans.insert(option_spans.end(), spans.begin(), spans.end());
        }
        if (option_spans.empty()) continue;
        matches.push_back({s.id, sentence_spans, option_spans});
    }
    return matches;
}

/// Delete all matched spans (merged, rightmost first), collapse doubled
/// whitespace at the seams, and record the flag count and bytes removed in
/// the document metadata.
inline Document excise_matches(const Document& d, const std::vector<QaMatch>& matches) {
    Document out = d;
    if (matches.empty()) return out;

    std::vector<TextSpan> spans;
    for (const QaMatch& m : matches) {
        spans.insert(spans.end(), m.sentence_spans.begin(), m.sentence_spans.end());
        spans.insert(spans.end(), m.option_spans.begin(), m.option_spans.end());
    }
    std::sort(spans.begin(), spans.end(),
              [](const TextSpan& a, const TextSpan& b) { return a.begin < b.begin; });
    std::vector<TextSpan> merged;
    for (const TextSpan& s : spans) {
        if (!merged.empty() && s.begin <= merged.back().end)
            merged.back().end = std::max(merged.back().end, s.end);
        else
            merged.push_back(s);
    }

    std::string text = d.text;
    std::size_t removed_bytes = 0;
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
        if (it->end > text.size()) throw std::invalid_argument("excise_matches: span out of range");
        removed_bytes += it->end - it->begin;
        text.erase(it->begin, it->end - it->begin);
        // collapse the whitespace run straddling the seam: one space between
        // words, nothing at the document edges
        std::size_t a = it->begin;
        while (a > 0 && std::isspace(static_cast<unsigned char>(text[a - 1]))) --a;
        std::size_t b = it->begin;
        while (b < text.size() && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
        if (b > a) text.replace(a, b - a, (a > 0 && b < text.size()) ? " " : "");
    }
    out.text = std::move(text);
    out.metadata["decontam_flags"] = std::to_string(matches.size());
    out.metadata["decontam_bytes_removed"] = std::to_string(removed_bytes);
    return out;
}

}  // namespace curate
