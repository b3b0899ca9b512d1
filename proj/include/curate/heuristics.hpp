#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "curate/corpus.hpp"

namespace curate {

/// Repetition statistics of a document, all expressed as character
/// fractions in [0, 1]. Duplicate fractions count the characters of the
/// second and later occurrences of a line/paragraph; top n-gram fractions
/// are the share of word characters covered by occurrences of the most
/// frequent word n-gram.
struct RepetitionStats {
    double dup_line_fraction = 0.0;
    double dup_paragraph_fraction = 0.0;
    std::array<double, 3> top_ngram_char_fraction{0.0, 0.0, 0.0};  // n = 2, 3, 4

    double top_ngram(int n) const { return top_ngram_char_fraction.at(static_cast<std::size_t>(n - 2)); }
};

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            out.push_back(text.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline std::vector<std::string_view> split_paragraphs(std::string_view text) {
    // paragraphs are blank-line separated blocks
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find("\n\n", pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view para = text.substr(pos, end - pos);
        while (!para.empty() && para.front() == '\n') para.remove_prefix(1);
        if (!para.empty()) out.push_back(para);
        pos = end + 2;
    }
    return out;
}

inline std::string_view trimmed(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline double duplicate_char_fraction(const std::vector<std::string_view>& units) {
    std::size_t total = 0, dup = 0;
    std::unordered_map<std::string_view, int> seen;
    for (std::string_view u : units) {
        std::string_view t = trimmed(u);
        if (t.empty()) continue;
        total += t.size();
        if (seen[t]++ > 0) dup += t.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(dup) / static_cast<double>(total);
}

inline std::size_t codepoint_length(std::string_view s) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < s.size();) {
        i += decode_utf8(s, i).size;
        ++n;
    }
    return n;
}

}  // namespace detail

inline RepetitionStats repetition_stats(std::string_view text,
                                        const Tokenizer& tok = Tokenizer::unicode_words()) {
    RepetitionStats st;
    if (text.empty()) return st;
    st.dup_line_fraction = detail::duplicate_char_fraction(detail::split_lines(text));
    st.dup_paragraph_fraction = detail::duplicate_char_fraction(detail::split_paragraphs(text));

    const auto tokens = tok.tokens(text);
    std::size_t total_word_chars = 0;
    for (auto t : tokens) total_word_chars += t.size();
    if (total_word_chars == 0 || tokens.size() < 2) return st;

    for (int n = 2; n <= 4; ++n) {
        if (tokens.size() < static_cast<std::size_t>(n)) break;
        // most frequent n-gram, then character coverage of its occurrences
        std::unordered_map<std::string, int> counts;
        std::string key;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            key.clear();
            for (int j = 0; j < n; ++j) {
                if (j) key += '\x1f';
                key += tokens[i + j];
            }
            ++counts[key];
        }
        auto best = std::max_element(counts.begin(), counts.end(),
                                     [](const auto& a, const auto& b) {
                                         return a.second < b.second ||
                                                (a.second == b.second && a.first > b.first);
                                     });
        std::vector<char> covered(tokens.size(), 0);
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            key.clear();
            for (int j = 0; j < n; ++j) {
                if (j) key += '\x1f';
                key += tokens[i + j];
            }
            if (key == best->first)
                for (int j = 0; j < n; ++j) covered[i + j] = 1;
        }
        std::size_t covered_chars = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (covered[i]) covered_chars += tokens[i].size();
        st.top_ngram_char_fraction[static_cast<std::size_t>(n - 2)] =
            static_cast<double>(covered_chars) / static_cast<double>(total_word_chars);
    }
    return st;
}

/// Rule thresholds of the Gopher/RefinedWeb family. The zero-argument
/// constructor is fully permissive; named profiles ship as JSON config
/// (see configs/rules_refinedweb.json) and load via from_json.
struct HeuristicRules {
    std::size_t word_count_min = 0;
    std::size_t word_count_max = std::numeric_limits<std::size_t>::max();
    double mean_word_length_min = 0.0;
    double mean_word_length_max = std::numeric_limits<double>::infinity();
    double symbol_to_word_ratio_max = std::numeric_limits<double>::infinity();
    double fraction_alpha_words_min = 0.0;
    std::size_t stop_word_hits_min = 0;
    double dup_line_fraction_max = 1.0;
    double dup_paragraph_fraction_max = 1.0;
    std::array<double, 3> top_ngram_char_fraction_max{1.0, 1.0, 1.0};  // n = 2, 3, 4

    static HeuristicRules from_json(const nlohmann::json& j) {
        HeuristicRules r;
        if (j.contains("word_count")) {
            r.word_count_min = j["word_count"].value("min", std::uint64_t{0});
            r.word_count_max =
                j["word_count"].value("max", std::numeric_limits<std::uint64_t>::max());
        }
        if (j.contains("mean_word_length")) {
            r.mean_word_length_min = j["mean_word_length"].value("min", 0.0);
            r.mean_word_length_max =
                j["mean_word_length"].value("max", std::numeric_limits<double>::infinity());
        }
        r.symbol_to_word_ratio_max =
            j.value("symbol_to_word_ratio", std::numeric_limits<double>::infinity());
        r.fraction_alpha_words_min = j.value("fraction_alpha_words", 0.0);
        r.stop_word_hits_min = j.value("stop_word_hits", std::uint64_t{0});
        r.dup_line_fraction_max = j.value("dup_line_fraction", 1.0);
        r.dup_paragraph_fraction_max = j.value("dup_paragraph_fraction", 1.0);
        if (j.contains("top_ngram_char_fraction")) {
            const auto& t = j["top_ngram_char_fraction"];
            for (int n = 2; n <= 4; ++n) {
                const std::string key = std::to_string(n);
                if (t.contains(key))
                    r.top_ngram_char_fraction_max[static_cast<std::size_t>(n - 2)] =
                        t[key].get<double>();
            }
        }
        return r;
    }
};

/// The eight Gopher stop words.
inline const std::set<std::string>& gopher_stop_words() {
    static const std::set<std::string> words = {"the",  "be",   "to",  "of",
                                                "and",  "that", "have", "with"};
    return words;
}

struct FilterDecision {
    bool keep = true;
    std::string reason;  // first violated rule, empty when kept
    double value = 0.0;  // measured value for the violated rule

    static FilterDecision kept() { return {}; }
    static FilterDecision dropped(std::string why, double v) { return {false, std::move(why), v}; }
};

/// Evaluate rules in a fixed cheap-to-expensive order; the first violated
/// rule names the drop reason, so reason statistics are stable.
inline FilterDecision heuristic_filter(const Document& d, const HeuristicRules& r,
                                       const Tokenizer& tok = Tokenizer::unicode_words()) {
    const auto tokens = tok.tokens(d.text);
    const std::size_t words = tokens.size();

    if (words < r.word_count_min || words > r.word_count_max)
        return FilterDecision::dropped("word_count", static_cast<double>(words));

    if (words > 0) {
        std::size_t total_cp = 0;
        for (auto t : tokens) total_cp += detail::codepoint_length(t);
        const double mean_len = static_cast<double>(total_cp) / static_cast<double>(words);
        if (mean_len < r.mean_word_length_min || mean_len > r.mean_word_length_max)
            return FilterDecision::dropped("mean_word_length", mean_len);
    }

    {
        // symbols: '#', ASCII "..." runs, and U+2026 ellipsis
        std::size_t symbols = 0;
        for (std::size_t i = 0; i < d.text.size(); ++i) {
            if (d.text[i] == '#') ++symbols;
            else if (d.text.compare(i, 3, "...") == 0) { ++symbols; i += 2; }
            else if (d.text.compare(i, 3, "\xe2\x80\xa6") == 0) { ++symbols; i += 2; }
        }
        const double ratio =
            static_cast<double>(symbols) / static_cast<double>(std::max<std::size_t>(words, 1));
        if (ratio > r.symbol_to_word_ratio_max)
            return FilterDecision::dropped("symbol_to_word_ratio", ratio);
    }

    if (words > 0 && r.fraction_alpha_words_min > 0.0) {
        std::size_t alpha = 0;
        for (auto t : tokens) {
            bool has_alpha = false;
            for (std::size_t i = 0; i < t.size() && !has_alpha;) {
                const auto c = detail::decode_utf8(t, i);
                has_alpha = detail::classify(c.cp) == detail::CharClass::Letter ||
                            detail::classify(c.cp) == detail::CharClass::Ideograph ||
                            detail::classify(c.cp) == detail::CharClass::Katakana;
                i += c.size;
            }
            if (has_alpha) ++alpha;
        }
        const double frac = static_cast<double>(alpha) / static_cast<double>(words);
        if (frac < r.fraction_alpha_words_min)
            return FilterDecision::dropped("fraction_alpha_words", frac);
    }

    if (r.stop_word_hits_min > 0) {
        std::size_t hits = 0;
        std::string lowered;
        for (auto t : tokens) {
            lowered.assign(t);
            std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (gopher_stop_words().count(lowered)) ++hits;
        }
        if (hits < r.stop_word_hits_min)
            return FilterDecision::dropped("stop_word_hits", static_cast<double>(hits));
    }

    const bool needs_rep = r.dup_line_fraction_max < 1.0 || r.dup_paragraph_fraction_max < 1.0 ||
                           r.top_ngram_char_fraction_max[0] < 1.0 ||
                           r.top_ngram_char_fraction_max[1] < 1.0 ||
                           r.top_ngram_char_fraction_max[2] < 1.0;
    if (needs_rep) {
        const RepetitionStats st = repetition_stats(d.text, tok);
        if (st.dup_line_fraction > r.dup_line_fraction_max)
            return FilterDecision::dropped("dup_line_fraction", st.dup_line_fraction);
        if (st.dup_paragraph_fraction > r.dup_paragraph_fraction_max)
            return FilterDecision::dropped("dup_paragraph_fraction", st.dup_paragraph_fraction);
        for (int n = 2; n <= 4; ++n) {
            const auto idx = static_cast<std::size_t>(n - 2);
            if (st.top_ngram_char_fraction[idx] > r.top_ngram_char_fraction_max[idx])
                return FilterDecision::dropped("top_" + std::to_string(n) + "gram_char_fraction",
                                               st.top_ngram_char_fraction[idx]);
        }
    }
    return FilterDecision::kept();
}

// ---------------------------------------------------------------------------
// URL filtering
// ---------------------------------------------------------------------------

struct UrlBanlist {
    std::set<std::string> banned_domains;     // lowercase, punycode-normalized
    std::set<std::string> banned_substrings;  // matched against the lowercased URL

    /// Load newline-delimited files; '#' lines are comments. Either path may
    /// be empty.
    static UrlBanlist load(const std::string& domains_path, const std::string& substrings_path) {
        UrlBanlist b;
        auto read_into = [](const std::string& path, std::set<std::string>& out) {
            if (path.empty()) return;
            std::ifstream f(path);
            if (!f) throw std::runtime_error("cannot open banlist " + path);
            std::string line;
            while (std::getline(f, line)) {
                auto t = detail::trimmed(line);
                if (t.empty() || t.front() == '#') continue;
                std::string entry(t);
                std::transform(entry.begin(), entry.end(), entry.begin(),
                               [](unsigned char c) { return std::tolower(c); });
                out.insert(entry);
            }
        };
        read_into(domains_path, b.banned_domains);
        read_into(substrings_path, b.banned_substrings);
        return b;
    }
};

namespace detail {

/// Host part of a URL, lowercased; empty when the URL has no authority form.
inline std::string url_host(std::string_view url) {
    std::size_t scheme = url.find("://");
    std::string_view rest = scheme == std::string_view::npos ? url : url.substr(scheme + 3);
    if (scheme == std::string_view::npos) return {};
    std::size_t end = rest.find_first_of("/:?#");
    std::string_view host = rest.substr(0, end);
    if (auto at = host.rfind('@'); at != std::string_view::npos) host = host.substr(at + 1);
    std::string out(host);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

}  // namespace detail

/// Drop when the host is on the domain banlist (exact or dot-suffix match)
/// or when any banned substring occurs anywhere in the URL. Empty URLs keep.
inline FilterDecision url_filter(const Document& d, const UrlBanlist& b) {
    if (d.url.empty()) return FilterDecision::kept();

    const std::string host = detail::url_host(d.url);
    if (!host.empty()) {
        std::string_view h = host;
        while (true) {
            if (b.banned_domains.count(std::string(h)))
                return FilterDecision::dropped("banned_domain", 1.0);
            const std::size_t dot = h.find('.');
            if (dot == std::string_view::npos) break;
            h.remove_prefix(dot + 1);
        }
    }

    std::string lowered = d.url;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    for (const std::string& sub : b.banned_substrings)
        if (lowered.find(sub) != std::string::npos)
            return FilterDecision::dropped("banned_substring", 1.0);
    return FilterDecision::kept();
}

}  // namespace curate
