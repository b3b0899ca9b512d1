#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "curate/corpus.hpp"
#include "curate/hash.hpp"

namespace curate {

struct MixEntry {
    std::string label;
    Corpus documents;
    double weight = 0.0;
};

struct MixSpec {
    std::vector<MixEntry> entries;
    std::uint64_t target_tokens = 0;
    std::uint64_t seed = 42;
};

/// Sample documents per source without replacement, in seeded shuffled
/// order, until each source's token quota (weight * target_tokens after
/// weight normalization) is first met or exceeded; the last document may
/// overshoot. Output is a seeded shuffle of the union, each document tagged
/// with its source label.
inline Corpus mix_sources(const MixSpec& spec, const Tokenizer& tok) {
    if (spec.entries.empty()) throw std::invalid_argument("mix_sources: no entries");
    double weight_sum = 0.0;
    {
        std::map<std::string, int> seen;
        for (const MixEntry& e : spec.entries) {
            if (e.weight < 0.0) throw std::invalid_argument("mix_sources: negative weight");
            if (++seen[e.label] > 1)
                throw std::invalid_argument("mix_sources: duplicate label " + e.label);
            weight_sum += e.weight;
        }
    }
    if (weight_sum <= 0.0) throw std::invalid_argument("mix_sources: weights sum to zero");

    Corpus selected;
    for (const MixEntry& e : spec.entries) {
        const double quota =
            e.weight / weight_sum * static_cast<double>(spec.target_tokens);
        if (quota <= 0.0) continue;  // zero-weight sources contribute nothing

        std::vector<std::size_t> order(e.documents.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        SplitMixRng rng(spec.seed ^ hash_bytes(e.label));
        deterministic_shuffle(order, rng);

        std::uint64_t got = 0;
        bool met = false;
        for (std::size_t idx : order) {
            Document d = e.documents[idx];
            got += count_tokens(d, tok);
            d.source = e.label;
            selected.push_back(std::move(d));
            if (static_cast<double>(got) >= quota) {
                met = true;
                break;
            }
        }
        if (!met)
            throw std::runtime_error("mix_sources: source \"" + e.label + "\" holds only " +
                                     std::to_string(got) + " tokens of the required " +
                                     std::to_string(quota));
    }

    SplitMixRng rng(splitmix64(spec.seed));
    deterministic_shuffle(selected, rng);
    return selected;
}

struct MixtureReport {
    struct Row {
        std::string source;
        std::size_t documents = 0;
        std::uint64_t tokens = 0;
        double fraction = 0.0;
    };
    std::vector<Row> rows;  // sorted by source label
    std::uint64_t total_tokens = 0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["total_tokens"] = total_tokens;
        j["sources"] = nlohmann::json::array();
        for (const Row& r : rows)
            j["sources"].push_back({{"source", r.source},
                                    {"documents", r.documents},
                                    {"tokens", r.tokens},
                                    {"fraction", r.fraction}});
        return j;
    }
};

/// Per-source token counts and fractions; unlabeled documents count under
/// "unknown".
inline MixtureReport mixture_report(const Corpus& corpus, const Tokenizer& tok) {
    MixtureReport report;
    std::map<std::string, MixtureReport::Row> by_source;
    for (const Document& d : corpus) {
        const std::string label = d.source.empty() ? "unknown" : d.source;
        auto& row = by_source[label];
        row.source = label;
        ++row.documents;
        const std::uint64_t t = count_tokens(d, tok);
        row.tokens += t;
        report.total_tokens += t;
    }
    for (auto& [label, row] : by_source) {
        row.fraction = report.total_tokens == 0
                           ? 0.0
                           : static_cast<double>(row.tokens) /
                                 static_cast<double>(report.total_tokens);
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace curate
