#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "gtest/gtest.h"

#include "curate/minhash.hpp"

#include "testutil.hpp"

using namespace curate;
using testutil::doc;

namespace {

// brute-force Jaccard over the same shingle construction the signatures use
std::set<std::string> shingle_set(const std::string& text, std::size_t n, const Tokenizer& tok) {
    auto toks = tok.token_strings(text);
    std::set<std::string> out;
    if (toks.empty()) return out;
    if (toks.size() < n) {
        std::string key;
        for (std::size_t j = 0; j < toks.size(); ++j) {
            if (j) key += ' ';
            key += toks[j];
        }
        out.insert(key);
        return out;
    }
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
        std::string key;
        for (std::size_t j = 0; j < n; ++j) {
            if (j) key += ' ';
            key += toks[i + j];
        }
        out.insert(key);
    }
    return out;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    const std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double matching_fraction(const MinHashSignature& a, const MinHashSignature& b) {
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.minima.size(); ++i)
        if (a.minima[i] == b.minima[i]) ++same;
    return static_cast<double>(same) / static_cast<double>(a.minima.size());
}

/// token list "t<base> t<base+1> ..." guaranteed-unique words
std::string token_range(int base, int count, const std::string& prefix = "t") {
    std::string s;
    for (int i = 0; i < count; ++i) {
        if (i) s += ' ';
        s += prefix + std::to_string(base + i);
    }
    return s;
}

}  // namespace

TEST(MinHashSignatureTest, IdenticalDocumentsIdenticalSignatures) {
    MinHashConfig cfg;
    const auto a = minhash_signature(doc("a", token_range(0, 30)), cfg);
    const auto b = minhash_signature(doc("b", token_range(0, 30)), cfg);
    EXPECT_EQ(a.minima, b.minima);
}

TEST(MinHashSignatureTest, DisjointDocumentsRarelyCollide) {
    MinHashConfig cfg;
    const auto a = minhash_signature(doc("a", token_range(0, 50)), cfg);
    const auto b = minhash_signature(doc("b", token_range(10000, 50)), cfg);
    EXPECT_LT(matching_fraction(a, b), 0.005);
}

TEST(MinHashSignatureTest, EmptyDocumentRejected) {
    EXPECT_THROW(minhash_signature(doc("e", ""), MinHashConfig{}), std::invalid_argument);
}

TEST(MinHashSignatureTest, ShortDocumentSingleShingle) {
    MinHashConfig cfg;  // ngram 5
    const auto a = minhash_signature(doc("a", "just three tokens"), cfg);
    const auto b = minhash_signature(doc("b", "just three tokens"), cfg);
    EXPECT_EQ(a.minima, b.minima);
    EXPECT_EQ(a.minima.size(), cfg.permutations());
}

TEST(MinHashSignatureTest, MatchFractionEstimatesJaccard) {
    // half-shared shingles at ngram 1: J = 100/200 = 0.5 exactly
    MinHashConfig cfg;
    cfg.ngram_size = 1;
    Tokenizer tok = Tokenizer::unicode_words();
    const std::string shared = token_range(0, 100, "s");
    const Document a = doc("a", shared + " " + token_range(0, 50, "a"));
    const Document b = doc("b", shared + " " + token_range(0, 50, "b"));
    const double j = jaccard(shingle_set(a.text, 1, tok), shingle_set(b.text, 1, tok));
    ASSERT_DOUBLE_EQ(j, 0.5);
    const double frac =
        matching_fraction(minhash_signature(a, cfg), minhash_signature(b, cfg));
    // 1395 permutations: 3 sigma ~= 0.04
    EXPECT_NEAR(frac, 0.5, 0.05);
}

TEST(MinHashSignatureTest, MatchFractionTracksJaccardFiveGram) {
    MinHashConfig cfg;  // ngram 5
    Tokenizer tok = Tokenizer::unicode_words();
    // overlapping halves: shingle Jaccard computed by brute force
    const Document a = doc("a", token_range(0, 120));
    const Document b = doc("b", token_range(60, 120));
    const double j = jaccard(shingle_set(a.text, 5, tok), shingle_set(b.text, 5, tok));
    const double frac =
        matching_fraction(minhash_signature(a, cfg), minhash_signature(b, cfg));
    EXPECT_NEAR(frac, j, 0.05);
}

TEST(DetectProb, Endpoints) {
    EXPECT_DOUBLE_EQ(minhash_detect_prob(0.0, 93, 15), 0.0);
    EXPECT_DOUBLE_EQ(minhash_detect_prob(1.0, 93, 15), 1.0);
}

TEST(DetectProb, ProductionPoint) {
    const double p = minhash_detect_prob(0.8, 93, 15);
    EXPECT_GT(p, 0.955);
    EXPECT_LT(p, 0.975);
    EXPECT_NEAR(p, 0.9642461641921033, 1e-12);
}

TEST(DetectProb, BudgetCurveCloseToReferenceCurve) {
    // premise of the cheaper banding substitution: the (93,15) and (450,20)
    // curves differ by less than 0.1 everywhere on a 0.05 grid
    double max_gap = 0.0;
    for (int i = 0; i <= 20; ++i) {
        const double s = static_cast<double>(i) * 0.05;
        max_gap = std::max(max_gap,
                           std::abs(minhash_detect_prob(s, 93, 15) -
                                    minhash_detect_prob(s, 450, 20)));
    }
    EXPECT_LT(max_gap, 0.1);
}

TEST(CalibrateBands, FullBudgetReturnsReferenceItself) {
    const auto c = calibrate_bands(9000, 450, 20);
    EXPECT_EQ(c.buckets, 450u);
    EXPECT_EQ(c.rows, 20u);
    EXPECT_DOUBLE_EQ(c.distance, 0.0);
}

TEST(CalibrateBands, Budget1395NearTieWithProductionChoice) {
    // The minimizer over b*r <= 1395 is (92,15); the production (93,15)
    // uses the budget exactly and sits within 1e-4 RMS of it.
    const auto c = calibrate_bands(1395, 450, 20);
    EXPECT_EQ(c.rows, 15u);
    EXPECT_TRUE(c.buckets == 92 || c.buckets == 93);
    const double d_prod = band_curve_distance(93, 15, 450, 20);
    EXPECT_LE(c.distance, d_prod + 1e-12);
    EXPECT_LT(d_prod - c.distance, 1e-4);
}

TEST(CalibrateBands, Budget126MatchesSmallReferenceScheme) {
    // grid search at budget 126; the returned curve must sit close to the
    // known (14, 9) small-budget scheme
    const auto c = calibrate_bands(126, 450, 20);
    EXPECT_EQ(c.buckets, 13u);
    EXPECT_EQ(c.rows, 9u);
    EXPECT_LT(band_curve_distance(c.buckets, c.rows, 14, 9), 0.02);
}

TEST(MinHashClusterTest, AllIdenticalOneCluster) {
    MinHashConfig cfg;
    std::vector<MinHashSignature> sigs;
    for (int i = 0; i < 5; ++i)
        sigs.push_back(minhash_signature(doc("doc" + std::to_string(i), token_range(0, 40)), cfg));
    const auto clusters = minhash_cluster(sigs, cfg);
    ASSERT_EQ(clusters.size(), 1u);
    EXPECT_EQ(clusters[0].members.size(), 5u);
    EXPECT_EQ(clusters[0].retained, "doc0");
}

TEST(MinHashClusterTest, DisjointDocsNoClusters) {
    MinHashConfig cfg;
    std::vector<MinHashSignature> sigs;
    for (int i = 0; i < 10; ++i)
        sigs.push_back(
            minhash_signature(doc("d" + std::to_string(i), token_range(i * 1000, 40)), cfg));
    EXPECT_TRUE(minhash_cluster(sigs, cfg).empty());
}

TEST(MinHashClusterTest, MixedConfigRejected) {
    MinHashConfig a, b;
    b.seed = a.seed + 1;
    std::vector<MinHashSignature> sigs;
    sigs.push_back(minhash_signature(doc("x", token_range(0, 30)), a));
    sigs.push_back(minhash_signature(doc("y", token_range(0, 30)), b));
    EXPECT_THROW(minhash_cluster(sigs, a), std::invalid_argument);
}

TEST(MinHashClusterTest, PlantedPairsAgainstBruteForce) {
    // 200 docs: 60 near-duplicate pairs (high Jaccard) + 80 unique docs.
    // Candidate links must agree with the all-pairs Jaccard >= 0.8 oracle up
    // to the analytic detection probability.
    MinHashConfig cfg;
    cfg.ngram_size = 1;  // exact control of shingle sets
    Tokenizer tok = Tokenizer::unicode_words();
    SplitMixRng rng(20240720);
    Corpus docs;
    int next_token = 0;
    for (int p = 0; p < 60; ++p) {
        // two docs sharing 90 of 100 tokens: J = 90/110 ~ 0.818
        const std::string shared = token_range(next_token, 90);
        next_token += 90;
        const std::string ua = token_range(next_token, 10);
        next_token += 10;
        const std::string ub = token_range(next_token, 10);
        next_token += 10;
        docs.push_back(doc("p" + std::to_string(p) + "a", shared + " " + ua));
        docs.push_back(doc("p" + std::to_string(p) + "b", shared + " " + ub));
    }
    for (int u = 0; u < 80; ++u) {
        docs.push_back(doc("u" + std::to_string(u), token_range(next_token, 100)));
        next_token += 100;
    }

    std::vector<MinHashSignature> sigs;
    std::vector<std::set<std::string>> shingles;
    for (const auto& d : docs) {
        sigs.push_back(minhash_signature(d, cfg, tok));
        shingles.push_back(shingle_set(d.text, cfg.ngram_size, tok));
    }
    const auto clusters = minhash_cluster(sigs, cfg);

    std::set<std::pair<std::string, std::string>> flagged;
    for (const auto& c : clusters)
        for (std::size_t i = 0; i < c.members.size(); ++i)
            for (std::size_t j = i + 1; j < c.members.size(); ++j)
                flagged.insert({c.members[i], c.members[j]});

    std::set<std::pair<std::string, std::string>> truth;
    double expected_recall = 0.0;
    for (std::size_t i = 0; i < docs.size(); ++i)
        for (std::size_t j = i + 1; j < docs.size(); ++j) {
            const double jac = jaccard(shingles[i], shingles[j]);
            if (jac >= 0.8) {
                auto pr = std::minmax(docs[i].id, docs[j].id);
                truth.insert({pr.first, pr.second});
                expected_recall += minhash_detect_prob(jac, cfg.buckets, cfg.rows);
            }
        }
    ASSERT_EQ(truth.size(), 60u);
    expected_recall /= static_cast<double>(truth.size());

    std::size_t true_flagged = 0;
    for (const auto& pr : flagged)
        if (truth.count(pr)) ++true_flagged;

    const double precision = flagged.empty()
                                 ? 1.0
                                 : static_cast<double>(true_flagged) /
                                       static_cast<double>(flagged.size());
    const double recall = static_cast<double>(true_flagged) / static_cast<double>(truth.size());
    EXPECT_GE(precision, 0.95);
    EXPECT_GE(recall, expected_recall - 0.05);
}

TEST(MinHashDedup, RemovesNonRetainedMembers) {
    MinHashConfig cfg;
    Corpus docs = {doc("b", token_range(0, 40)), doc("a", token_range(0, 40)),
                   doc("c", token_range(5000, 40))};
    const Corpus out = minhash_dedup(docs, cfg);
    ASSERT_EQ(out.size(), 2u);
    // retained = smallest id "a"; input order preserved
    EXPECT_EQ(out[0].id, "a");
    EXPECT_EQ(out[1].id, "c");
}
