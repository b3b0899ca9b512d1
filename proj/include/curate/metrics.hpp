#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "curate/corpus.hpp"

namespace curate {

struct TaskScore {
    std::string task;
    double accuracy = 0.0;         // in [0, 1]
    double random_baseline = 0.0;  // in [0, 1)
};

/// Rescale so the random baseline maps to 0 and perfect accuracy to 1.
/// Below-chance results come out negative.
inline double centered_accuracy(double accuracy, double baseline) {
    if (baseline >= 1.0 || baseline < 0.0)
        throw std::invalid_argument("centered_accuracy: baseline must be in [0, 1)");
    return (accuracy - baseline) / (1.0 - baseline);
}

/// Unweighted mean of centered accuracies (the aggregate benchmark score).
inline double aggregate_core(const std::vector<TaskScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("aggregate_core: no task scores");
    double sum = 0.0;
    for (const TaskScore& s : scores) sum += centered_accuracy(s.accuracy, s.random_baseline);
    return sum / static_cast<double>(scores.size());
}

/// ROC-AUC via the Mann-Whitney rank statistic; ties contribute 1/2.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw std::invalid_argument("roc_auc: scores/labels size mismatch");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y != 0 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("roc_auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tie groups
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] != 0) rank_sum_pos += avg_rank;
        i = j;
    }
    const double u = rank_sum_pos - static_cast<double>(n_pos) * (n_pos + 1) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct CorpusStats {
    std::size_t doc_count = 0;
    std::uint64_t total_tokens = 0;
    double mean_tokens_per_doc = 0.0;
    std::uint64_t median_tokens_per_doc = 0;  // lower middle for even counts
};

inline CorpusStats corpus_stats(const Corpus& corpus, const Tokenizer& tok) {
    CorpusStats st;
    st.doc_count = corpus.size();
    if (corpus.empty()) return st;
    std::vector<std::uint64_t> counts;
    counts.reserve(corpus.size());
    for (const Document& d : corpus) {
        const std::uint64_t c = count_tokens(d, tok);
        counts.push_back(c);
        st.total_tokens += c;
    }
    st.mean_tokens_per_doc =
        static_cast<double>(st.total_tokens) / static_cast<double>(st.doc_count);
    std::sort(counts.begin(), counts.end());
    st.median_tokens_per_doc = counts[(counts.size() - 1) / 2];
    return st;
}

}  // namespace curate
