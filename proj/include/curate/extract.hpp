#pragma once

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "curate/corpus.hpp"

namespace curate {

/// HTML-to-text extraction settings. Defaults aim for strict,
/// boilerplate-reduced output; wet_style() keeps everything except
/// script/style, mimicking pre-extracted WET text.
struct ExtractConfig {
    std::set<std::string> drop_elements = {"script", "style", "noscript", "iframe", "svg"};
    std::set<std::string> block_tags = {"p",  "div", "li", "br", "h1", "h2", "h3",
                                        "h4", "h5",  "h6", "tr", "ul", "ol", "table",
                                        "blockquote", "pre", "section", "article",
                                        "header", "footer", "nav", "form"};
    bool line_filters = true;
    double max_link_density = 0.5;       // drop lines mostly made of anchor text
    std::size_t min_short_line_words = 7;  // short lines matching the nav lexicon drop
    std::set<std::string> nav_lexicon = {
        "home",          "search",       "menu",        "subscribe",     "log in",
        "sign in",       "sign up",      "advertisement", "site index",  "site map",
        "privacy policy", "terms of service", "terms of use", "skip to content",
        "contact us",    "help",         "next",        "previous",      "share this page",
        "read more",     "cookie policy", "all rights reserved", "back to top"};

    static ExtractConfig wet_style() {
        ExtractConfig cfg;
        cfg.drop_elements = {"script", "style"};
        cfg.line_filters = false;
        return cfg;
    }
};

namespace detail {

inline std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

inline void append_entity(std::string_view name, std::string& out) {
    if (name == "amp") out += '&';
    else if (name == "lt") out += '<';
    else if (name == "gt") out += '>';
    else if (name == "quot") out += '"';
    else if (name == "apos") out += '\'';
    else if (name == "nbsp") out += ' ';
    else if (!name.empty() && name[0] == '#') {
        char32_t cp = 0;
        if (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) {
            for (char c : name.substr(2))
                cp = cp * 16 + (std::isdigit(static_cast<unsigned char>(c))
                                    ? static_cast<char32_t>(c - '0')
                                    : static_cast<char32_t>(std::tolower(c) - 'a' + 10));
        } else {
            for (char c : name.substr(1)) cp = cp * 10 + static_cast<char32_t>(c - '0');
        }
        // encode as UTF-8
        if (cp == 0 || cp > 0x10FFFF) return;
        if (cp < 0x80) out += static_cast<char>(cp);
        else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    // unknown named entities are dropped
}

struct ExtractedLine {
    std::string text;
    std::size_t link_chars = 0;
    std::size_t total_chars = 0;
};

}  // namespace detail

/// Strip markup from tolerant, possibly malformed HTML. Never fails; the
/// worst input yields empty text. Block-tag boundaries and literal newlines
/// become "\n", runs of whitespace collapse to one space within a line.
inline std::string extract_text(std::string_view html, const ExtractConfig& cfg = {}) {
    std::vector<detail::ExtractedLine> lines(1);
    int link_depth = 0;
    bool pending_space = false;

    auto emit_newline = [&] {
        if (!lines.back().text.empty()) lines.emplace_back();
        pending_space = false;
    };
    auto emit_char = [&](char c) {
        auto& line = lines.back();
        if (pending_space && !line.text.empty()) {
            line.text += ' ';
            ++line.total_chars;
            if (link_depth > 0) ++line.link_chars;
        }
        pending_space = false;
        line.text += c;
        ++line.total_chars;
        if (link_depth > 0) ++line.link_chars;
    };

    const std::size_t n = html.size();
    std::size_t i = 0;
    while (i < n) {
        const char c = html[i];
        if (c == '<') {
            // comments and declarations
            if (html.compare(i, 4, "<!--") == 0) {
                const std::size_t end = html.find("-->", i + 4);
                i = end == std::string_view::npos ? n : end + 3;
                continue;
            }
            if (i + 1 < n && (html[i + 1] == '!' || html[i + 1] == '?')) {
                const std::size_t end = html.find('>', i);
                i = end == std::string_view::npos ? n : end + 1;
                continue;
            }
            // tag name
            std::size_t j = i + 1;
            const bool closing = j < n && html[j] == '/';
            if (closing) ++j;
            std::size_t name_start = j;
            if (j < n && std::isalpha(static_cast<unsigned char>(html[j])))
                while (j < n &&
                       (std::isalnum(static_cast<unsigned char>(html[j])) || html[j] == '-'))
                    ++j;
            if (j == name_start) {
                // not a tag ("< " or "<3"), keep the character
                emit_char('<');
                ++i;
                continue;
            }
            const std::string name = detail::lowercase_ascii(html.substr(name_start, j - name_start));
            // scan to '>' respecting quoted attribute values
            char quote = 0;
            while (j < n) {
                const char a = html[j];
                if (quote) {
                    if (a == quote) quote = 0;
                } else if (a == '"' || a == '\'') {
                    quote = a;
                } else if (a == '>') {
                    break;
                }
                ++j;
            }
            i = j < n ? j + 1 : n;

            if (!closing && cfg.drop_elements.count(name)) {
                // raw-skip to the matching close tag
                const std::string close = "</" + name;
                std::size_t k = i;
                while (k < n) {
                    const std::size_t cand = html.find('<', k);
                    if (cand == std::string_view::npos) {
                        k = n;
                        break;
                    }
                    if (cand + close.size() <= n &&
                        detail::lowercase_ascii(html.substr(cand, close.size())) == close) {
                        const std::size_t end = html.find('>', cand);
                        k = end == std::string_view::npos ? n : end + 1;
                        break;
                    }
                    k = cand + 1;
                }
                i = k;
                continue;
            }
            if (name == "a") {
                link_depth += closing ? -1 : 1;
                if (link_depth < 0) link_depth = 0;
            }
            if (cfg.block_tags.count(name)) emit_newline();
            continue;
        }
        if (c == '&') {
            const std::size_t semi = html.find(';', i + 1);
            if (semi != std::string_view::npos && semi - i <= 10) {
                std::string decoded;
                detail::append_entity(html.substr(i + 1, semi - i - 1), decoded);
                for (char dc : decoded) {
                    if (dc == ' ') pending_space = true;
                    else emit_char(dc);
                }
                i = semi + 1;
                continue;
            }
            emit_char('&');
            ++i;
            continue;
        }
        if (c == '\n') {
            emit_newline();
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = true;
            ++i;
            continue;
        }
        emit_char(c);
        ++i;
    }

    // line-level boilerplate filters
    std::string out;
    Tokenizer word_tok = Tokenizer::unicode_words();
    for (auto& line : lines) {
        if (line.text.empty()) continue;
        if (cfg.line_filters) {
            const double density = line.total_chars == 0
                                       ? 0.0
                                       : static_cast<double>(line.link_chars) /
                                             static_cast<double>(line.total_chars);
            if (density > cfg.max_link_density) continue;
            const std::size_t words = word_tok.count(line.text);
            if (words < cfg.min_short_line_words) {
                const std::string lowered = detail::lowercase_ascii(line.text);
                bool nav = false;
                for (const auto& phrase : cfg.nav_lexicon)
                    if (lowered.find(phrase) != std::string::npos) {
                        nav = true;
                        break;
                    }
                if (nav) continue;
            }
        }
        if (!out.empty()) out += '\n';
        out += line.text;
    }
    return out;
}

/// Ratio of extracted tokens to the tokens of a WET-style "keep everything"
/// extraction of the same raw input. Zero-token raw input yields 0.
inline double extraction_ratio(std::string_view raw_html, std::string_view extracted,
                               const Tokenizer& tok = Tokenizer::unicode_words()) {
    const std::string raw_text = extract_text(raw_html, ExtractConfig::wet_style());
    const std::size_t raw_tokens = tok.count(raw_text);
    if (raw_tokens == 0) return 0.0;
    return static_cast<double>(tok.count(extracted)) / static_cast<double>(raw_tokens);
}

}  // namespace curate
