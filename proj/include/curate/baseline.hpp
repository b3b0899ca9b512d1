#pragma once

#include <string>
#include <vector>

#include "curate/pipeline.hpp"
#include "curate/quality.hpp"

namespace curate {

/// The reference curation chain: HTML extraction, heuristic rules,
/// Bloom-filter dedup (shard-local), classifier top-k% filtering
/// (corpus-global, since the percentile needs every score).
struct BaselineConfig {
    ExtractConfig extract;
    HeuristicRules rules;
    BffConfig bff;
    NgramClassifier classifier;  // trained
    double keep_fraction = 0.10;
    std::size_t shards = 1;
    std::size_t workers = 1;
    std::uint64_t seed = kDefaultSeed;
};

struct FunnelRow {
    std::string stage;
    std::uint64_t docs_in = 0;
    std::uint64_t docs_out = 0;
    double survival_pct_of_original = 0.0;
};

struct BaselineResult {
    Corpus corpus;
    ExecutionReport report;
    std::vector<FunnelRow> funnel;

    nlohmann::json funnel_json() const {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& row : funnel)
            j.push_back({{"stage", row.stage},
                         {"docs_in", row.docs_in},
                         {"docs_out", row.docs_out},
                         {"survival_pct_of_original", row.survival_pct_of_original}});
        return j;
    }
};

inline BaselineResult run_full_baseline(const Corpus& pool, const BaselineConfig& cfg) {
    const std::uint64_t original_docs = pool.size();

    Pipeline p;
    {
        nlohmann::json extract_params = {
            {"max_link_density", cfg.extract.max_link_density},
            {"min_short_line_words", cfg.extract.min_short_line_words},
            {"line_filters", cfg.extract.line_filters}};
        p.add_stage(std::make_shared<mappers::ExtractHtml>(extract_params));
    }
    {
        // carry the rules through their JSON profile form
        nlohmann::json rule_params = {
            {"word_count",
             {{"min", cfg.rules.word_count_min}, {"max", cfg.rules.word_count_max}}},
            {"symbol_to_word_ratio", cfg.rules.symbol_to_word_ratio_max},
            {"fraction_alpha_words", cfg.rules.fraction_alpha_words_min},
            {"stop_word_hits", cfg.rules.stop_word_hits_min},
            {"dup_line_fraction", cfg.rules.dup_line_fraction_max},
            {"dup_paragraph_fraction", cfg.rules.dup_paragraph_fraction_max},
            {"top_ngram_char_fraction",
             {{"2", cfg.rules.top_ngram_char_fraction_max[0]},
              {"3", cfg.rules.top_ngram_char_fraction_max[1]},
              {"4", cfg.rules.top_ngram_char_fraction_max[2]}}}};
        if (cfg.rules.mean_word_length_max < std::numeric_limits<double>::infinity() ||
            cfg.rules.mean_word_length_min > 0)
            rule_params["mean_word_length"] = {{"min", cfg.rules.mean_word_length_min},
                                               {"max", cfg.rules.mean_word_length_max}};
        p.add_stage(std::make_shared<mappers::HeuristicRulesFilter>(rule_params));
    }
    p.add_global({"dedup-bloom",
                  {{"min_ngram", cfg.bff.min_ngram_size},
                   {"max_ngram", cfg.bff.max_ngram_size},
                   {"threshold", cfg.bff.threshold},
                   {"fpr", cfg.bff.eps},
                   {"expected_tokens", cfg.bff.expected_tokens}},
                  /*shard_local=*/true});

    auto shards = shard_corpus(pool, cfg.shards, ShardPolicy::RoundRobin);
    ShardedRunResult staged = run_sharded(p, std::move(shards), cfg.workers, cfg.seed);

    // quality filtering is corpus-global: percentile over every score
    {
        StageReport sr;
        sr.stage = "quality-filter";
        sr.docs_in = staged.corpus.size();
        const Tokenizer tok = Tokenizer::unicode_words();
        sr.tokens_in = detail::corpus_tokens(staged.corpus, tok);
        ClassifierScorer scorer(cfg.classifier);
        auto filtered = quality_filter(staged.corpus, scorer, cfg.keep_fraction);
        sr.errors = filtered.scorer_errors;
        staged.corpus = std::move(filtered.corpus);
        sr.docs_out = staged.corpus.size();
        sr.tokens_out = detail::corpus_tokens(staged.corpus, tok);
        staged.report.stages.push_back(std::move(sr));
    }

    BaselineResult result;
    result.corpus = std::move(staged.corpus);
    result.report = std::move(staged.report);
    for (const auto& s : result.report.stages) {
        FunnelRow row;
        row.stage = s.stage;
        row.docs_in = s.docs_in;
        row.docs_out = s.docs_out;
        row.survival_pct_of_original =
            original_docs == 0 ? 0.0
                               : 100.0 * static_cast<double>(s.docs_out) /
                                     static_cast<double>(original_docs);
        result.funnel.push_back(row);
    }
    return result;
}

}  // namespace curate
