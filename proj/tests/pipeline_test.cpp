#include <string>
#include <vector>

#include "gtest/gtest.h"

#include "curate/baseline.hpp"
#include "curate/jsonl.hpp"
#include "curate/pipeline.hpp"

#include "testutil.hpp"

using namespace curate;
using testutil::doc;

namespace {

Shard make_shard(Corpus docs, std::size_t index = 0) {
    Shard s;
    s.index = index;
    s.documents = std::move(docs);
    return s;
}

std::string words(int count, int base, const std::string& prefix = "w") {
    std::string t;
    for (int i = 0; i < count; ++i) {
        if (i) t += ' ';
        t += prefix + std::to_string(base + i);
    }
    return t;
}

}  // namespace

TEST(ApplyMapper, FilterKeepsOrDrops) {
    mappers::MinWordCount filter(nlohmann::json{{"min", 1}});
    const Document d = doc("d", "hello");
    const auto kept = apply_mapper(filter, d);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept[0], d);

    mappers::MinWordCount strict(nlohmann::json{{"min", 10}});
    EXPECT_TRUE(apply_mapper(strict, d).empty());
}

TEST(ApplyMapper, EnricherAddsTokenCount) {
    mappers::TokenCountEnricher enricher(nlohmann::json::object());
    const Document d = doc("d", "three short words");
    const auto out = apply_mapper(enricher, d);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].metadata.at("token_count"), "3");
    EXPECT_EQ(out[0].text, d.text);
}

TEST(ApplyMapper, ModifierSplitsOnBlankLines) {
    mappers::SplitParagraphs splitter(nlohmann::json::object());
    const Document d = doc("d", "first paragraph here\n\nsecond paragraph here");
    const auto out = apply_mapper(splitter, d);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].id, "d#0");
    EXPECT_EQ(out[1].id, "d#1");
    EXPECT_EQ(out[0].text, "first paragraph here");
    EXPECT_EQ(out[1].text, "second paragraph here");
}

TEST(ApplyMapper, EnricherContractViolationIsFatal) {
    struct EvilEnricher final : Mapper {
        EvilEnricher() : Mapper(MapperKind::Enricher, "evil") {}
        std::vector<Document> apply(const Document& d) const override {
            Document out = d;
            out.text += " mutated";
            return {out};
        }
    };
    EXPECT_THROW(apply_mapper(EvilEnricher{}, doc("d", "x")), ContractViolation);
}

TEST(ApplyMapper, FilterContractViolationIsFatal) {
    struct EvilFilter final : Mapper {
        EvilFilter() : Mapper(MapperKind::Filter, "evil") {}
        std::vector<Document> apply(const Document& d) const override {
            Document out = d;
            out.text = "swapped";
            return {out};
        }
    };
    EXPECT_THROW(apply_mapper(EvilFilter{}, doc("d", "x")), ContractViolation);
}

TEST(RunPipeline, EmptyPipelineIsIdentity) {
    Pipeline p;
    Corpus docs = {doc("a", "one"), doc("b", "two")};
    auto r = run_pipeline(p, make_shard(docs));
    EXPECT_EQ(r.shard.documents, docs);
    EXPECT_TRUE(r.report.stages.empty());
}

TEST(RunPipeline, AlwaysFalseFilterEmptiesShard) {
    Pipeline p;
    p.add_stage(make_mapper(MapperKind::Filter, "min_word_count",
                            nlohmann::json{{"min", 1000000}}));
    auto r = run_pipeline(p, make_shard({doc("a", "one"), doc("b", "two")}));
    EXPECT_TRUE(r.shard.documents.empty());
    ASSERT_EQ(r.report.stages.size(), 1u);
    EXPECT_DOUBLE_EQ(r.report.stages[0].removal_rate(), 1.0);
}

TEST(RunPipeline, FilterModifierChainMatchesHandTrace) {
    // 100 docs: 40 with >= 5 words, of which each splits into 2 paragraphs
    Corpus docs;
    for (int i = 0; i < 100; ++i) {
        if (i % 5 < 2) {
            docs.push_back(doc("long" + std::to_string(i),
                               words(6, i * 10) + "\n\n" + words(6, i * 10 + 100)));
        } else {
            docs.push_back(doc("short" + std::to_string(i), "tiny"));
        }
    }
    Pipeline p;
    p.add_stage(make_mapper(MapperKind::Filter, "min_word_count", nlohmann::json{{"min", 5}}));
    p.add_stage(make_mapper(MapperKind::Modifier, "split_paragraphs", nlohmann::json::object()));
    auto r = run_pipeline(p, make_shard(docs));
    // 40 pass the filter, each splits in two
    ASSERT_EQ(r.report.stages.size(), 2u);
    EXPECT_EQ(r.report.stages[0].docs_in, 100u);
    EXPECT_EQ(r.report.stages[0].docs_out, 40u);
    EXPECT_EQ(r.report.stages[1].docs_in, 40u);
    EXPECT_EQ(r.report.stages[1].docs_out, 80u);
    EXPECT_EQ(r.shard.documents.size(), 80u);
    // conservation: docs_out of stage i == docs_in of stage i+1
    EXPECT_EQ(r.report.stages[0].docs_out, r.report.stages[1].docs_in);
}

TEST(RunPipeline, MapperInternalFailureDropsAndCounts) {
    struct Flaky final : Mapper {
        Flaky() : Mapper(MapperKind::Modifier, "flaky") {}
        std::vector<Document> apply(const Document& d) const override {
            if (d.id == "poison") throw std::runtime_error("boom");
            return {d};
        }
    };
    Pipeline p;
    p.add_stage(std::make_shared<Flaky>());
    auto r = run_pipeline(p, make_shard({doc("ok1", "x"), doc("poison", "y"), doc("ok2", "z")}));
    EXPECT_EQ(r.shard.documents.size(), 2u);
    EXPECT_EQ(r.report.stages[0].errors, 1u);
}

TEST(RunPipeline, TokensNeverIncreaseAcrossFilters) {
    SplitMixRng rng(5150);
    Corpus docs;
    for (int i = 0; i < 50; ++i)
        docs.push_back(doc("d" + std::to_string(i),
                           testutil::random_words(1 + rng.next_below(30), rng)));
    Pipeline p;
    p.add_stage(make_mapper(MapperKind::Filter, "min_word_count", nlohmann::json{{"min", 10}}));
    auto r = run_pipeline(p, make_shard(docs));
    EXPECT_LE(r.report.stages[0].tokens_out, r.report.stages[0].tokens_in);
}

TEST(RunPipeline, BuiltInEnrichersPreserveTextProperty) {
    SplitMixRng rng(616);
    const char* enrichers[] = {"token_count", "language_stub"};
    for (const char* name : enrichers) {
        auto m = make_mapper(MapperKind::Enricher, name, nlohmann::json::object());
        for (int i = 0; i < 25; ++i) {
            const Document d = doc("d", testutil::random_words(rng.next_below(20), rng));
            const auto out = apply_mapper(*m, d);  // contract enforced inside
            ASSERT_EQ(out.size(), 1u);
            EXPECT_EQ(out[0].text, d.text);
        }
    }
}

TEST(PipelineConfig, MinimalEmptyConfig) {
    const Pipeline p = load_pipeline_config(R"({"stages":[]})");
    EXPECT_TRUE(p.stages().empty());
    EXPECT_TRUE(p.globals().empty());
}

TEST(PipelineConfig, UnknownStageNamedInError) {
    try {
        load_pipeline_config(R"({"stages":[{"kind":"filter","name":"frobnicate"}]})");
        FAIL() << "expected load error";
    } catch (const std::runtime_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("frobnicate"), std::string::npos);
        EXPECT_NE(msg.find("stages[0]"), std::string::npos);
    }
}

TEST(PipelineConfig, UnknownGlobalRejected) {
    EXPECT_THROW(load_pipeline_config(R"({"globals":[{"name":"dedup-quantum"}]})"),
                 std::runtime_error);
}

TEST(PipelineConfig, DuplicateStageNameRejected) {
    EXPECT_THROW(load_pipeline_config(
                     R"({"stages":[{"kind":"enricher","name":"token_count"},
                                   {"kind":"enricher","name":"token_count"}]})"),
                 std::runtime_error);
}

TEST(PipelineConfig, FullBaselineConfigRoundTrips) {
    const std::string config = R"({
      "stages": [
        {"kind": "modifier", "name": "extract", "params": {"max_link_density": 0.5}},
        {"kind": "filter", "name": "heuristic_rules",
         "params": {"word_count": {"min": 5, "max": 100000}, "stop_word_hits": 0}}
      ],
      "globals": [
        {"name": "dedup-bloom",
         "params": {"min_ngram": 13, "max_ngram": 13, "threshold": 0.8, "fpr": 0.01},
         "scope": "shard-local"},
        {"name": "quality-filter",
         "params": {"keep_fraction": 0.1, "model_file": "model.ngc"},
         "scope": "corpus-global"}
      ]
    })";
    const Pipeline p = load_pipeline_config(config);
    ASSERT_EQ(p.stages().size(), 2u);
    ASSERT_EQ(p.globals().size(), 2u);
    EXPECT_TRUE(p.globals()[0].shard_local);
    EXPECT_FALSE(p.globals()[1].shard_local);

    // canonical serialization reloads to the same canonical form
    const nlohmann::json canonical = p.to_json();
    const Pipeline reloaded = Pipeline::from_json(canonical);
    EXPECT_EQ(reloaded.to_json(), canonical);
}

TEST(RunSharded, WorkerCountDoesNotChangeOutput) {
    SplitMixRng rng(2601);
    Corpus docs;
    for (int i = 0; i < 400; ++i)
        docs.push_back(doc("d" + std::to_string(i),
                           testutil::random_words(3 + rng.next_below(25), rng)));
    Pipeline p;
    p.add_stage(make_mapper(MapperKind::Filter, "min_word_count", nlohmann::json{{"min", 8}}));
    p.add_stage(make_mapper(MapperKind::Enricher, "token_count", nlohmann::json::object()));
    p.add_global({"dedup-bloom",
                  {{"min_ngram", 5}, {"max_ngram", 5}, {"expected_tokens", 100000}},
                  true});

    auto shards1 = shard_corpus(docs, 8, ShardPolicy::RoundRobin);
    auto shards2 = shard_corpus(docs, 8, ShardPolicy::RoundRobin);
    auto r1 = run_sharded(p, std::move(shards1), 1);
    auto r8 = run_sharded(p, std::move(shards2), 8);
    EXPECT_EQ(r1.corpus, r8.corpus);
}

TEST(RunSharded, MergedReportSumsShardReports) {
    Corpus docs;
    for (int i = 0; i < 90; ++i)
        docs.push_back(doc("d" + std::to_string(i), i % 3 ? "enough words right here" : "no"));
    Pipeline p;
    p.add_stage(make_mapper(MapperKind::Filter, "min_word_count", nlohmann::json{{"min", 3}}));

    auto shards = shard_corpus(docs, 5, ShardPolicy::RoundRobin);
    std::uint64_t expect_in = 0, expect_out = 0;
    for (const auto& s : shards) {
        auto r = run_pipeline(p, s);
        expect_in += r.report.stages[0].docs_in;
        expect_out += r.report.stages[0].docs_out;
    }
    auto merged = run_sharded(p, std::move(shards), 3);
    ASSERT_EQ(merged.report.stages.size(), 1u);
    EXPECT_EQ(merged.report.stages[0].docs_in, expect_in);
    EXPECT_EQ(merged.report.stages[0].docs_out, expect_out);
    EXPECT_EQ(merged.report.stages[0].docs_in, 90u);
    EXPECT_EQ(merged.report.stages[0].docs_out, 60u);
}

TEST(RunSharded, ShardLocalBloomKeepsCrossShardDuplicate) {
    // a duplicate pair split across two shards survives shard-local dedup;
    // one shard removes it
    const std::string dup = words(30, 0);
    Corpus docs = {doc("a", dup), doc("b", dup)};
    Pipeline p;
    p.add_global({"dedup-bloom",
                  {{"min_ngram", 13}, {"max_ngram", 13}, {"expected_tokens", 10000}},
                  true});

    auto two = run_sharded(p, shard_corpus(docs, 2, ShardPolicy::RoundRobin), 2);
    EXPECT_EQ(two.corpus.size(), 2u);  // each shard sees one copy

    auto one = run_sharded(p, shard_corpus(docs, 1, ShardPolicy::RoundRobin), 2);
    EXPECT_EQ(one.corpus.size(), 1u);
}

TEST(RunSharded, CorpusGlobalBloomRemovesCrossShardDuplicate) {
    const std::string dup = words(30, 0);
    Corpus docs = {doc("a", dup), doc("b", dup)};
    Pipeline p;
    GlobalStage g{"dedup-bloom",
                  {{"min_ngram", 13}, {"max_ngram", 13}, {"expected_tokens", 10000}},
                  false};
    p.add_global(g);
    auto r = run_sharded(p, shard_corpus(docs, 2, ShardPolicy::RoundRobin), 4);
    EXPECT_EQ(r.corpus.size(), 1u);
}

TEST(RunSharded, WorkerFailurePropagates) {
    struct Bomb final : Mapper {
        Bomb() : Mapper(MapperKind::Enricher, "bomb") {}
        std::vector<Document> apply(const Document& d) const override {
            Document out = d;
            out.text += "!";  // contract violation -> fatal inside the worker
            return {out};
        }
    };
    Pipeline p;
    p.add_stage(std::make_shared<Bomb>());
    Corpus docs = {doc("a", "x"), doc("b", "y")};
    EXPECT_THROW(run_sharded(p, shard_corpus(docs, 2, ShardPolicy::RoundRobin), 2),
                 ContractViolation);
}

TEST(RegisterMapper, CustomMapperLoadsFromConfig) {
    register_mapper(MapperKind::Filter, "test_custom_keep_all",
                    [](const nlohmann::json& params) -> std::shared_ptr<Mapper> {
                        struct KeepAll final : Mapper {
                            explicit KeepAll(const nlohmann::json& p)
                                : Mapper(MapperKind::Filter, "test_custom_keep_all", p) {}
                            std::vector<Document> apply(const Document& d) const override {
                                return {d};
                            }
                        };
                        return std::make_shared<KeepAll>(params);
                    });
    const Pipeline p = load_pipeline_config(
        R"({"stages":[{"kind":"filter","name":"test_custom_keep_all"}]})");
    auto r = run_pipeline(p, make_shard({doc("a", "x")}));
    EXPECT_EQ(r.shard.documents.size(), 1u);
}

// ---------------------------------------------------------------------------
// Full baseline
// ---------------------------------------------------------------------------

namespace {

/// Synthetic raw pool: HTML docs, some rule-violating (too short), some
/// duplicated, a quality split driven by a marker token.
Corpus synthetic_pool(std::size_t n, SplitMixRng& rng) {
    Corpus pool;
    const std::string dup_body = words(40, 90000, "dupword");
    for (std::size_t i = 0; i < n; ++i) {
        std::string body;
        const std::uint64_t kind = rng.next_below(10);
        if (kind < 3) {
            body = dup_body;  // 30% planted duplicates
        } else if (kind < 5) {
            body = "tiny";  // rule violators (word_count < 8)
        } else if (kind < 6) {
            body = "quality " + testutil::random_words(20 + rng.next_below(10), rng, 3000);
        } else {
            body = "filler " + testutil::random_words(20 + rng.next_below(10), rng, 3000);
        }
        pool.push_back(doc("p" + std::to_string(i),
                           "<html><body><p>" + body + "</p></body></html>"));
    }
    return pool;
}

NgramClassifier quality_marker_model() {
    SplitMixRng rng(31);
    Corpus pos, neg;
    for (int i = 0; i < 300; ++i) {
        pos.push_back(doc("p" + std::to_string(i),
                          "quality " + testutil::random_words(25, rng, 3000)));
        neg.push_back(doc("n" + std::to_string(i),
                          "filler " + testutil::random_words(25, rng, 3000)));
    }
    ClassifierConfig cfg;
    cfg.bucket_count = 1u << 16;
    return train_classifier(pos, neg, cfg);
}

}  // namespace

TEST(FullBaseline, FunnelMatchesComposedStageOracles) {
    SplitMixRng rng(414243);
    const Corpus pool = synthetic_pool(1000, rng);

    BaselineConfig cfg;
    cfg.rules.word_count_min = 8;
    cfg.bff.expected_tokens = 200'000;
    cfg.classifier = quality_marker_model();
    cfg.keep_fraction = 0.10;
    cfg.shards = 1;
    cfg.workers = 1;

    const BaselineResult r = run_full_baseline(pool, cfg);

    // stage-by-stage oracle composition
    Corpus cur;
    for (const auto& d : pool) {
        Document e = d;
        e.text = extract_text(d.text);
        cur.push_back(e);
    }
    Corpus kept;
    for (const auto& d : cur)
        if (heuristic_filter(d, cfg.rules).keep) kept.push_back(d);
    BloomFilter filter = cfg.bff.make_filter(cfg.seed);
    auto bff = bff_process_corpus(kept, filter, cfg.bff);
    ClassifierScorer scorer(cfg.classifier);
    auto final_docs = quality_filter(bff.corpus, scorer, cfg.keep_fraction);

    ASSERT_EQ(r.funnel.size(), 4u);
    EXPECT_EQ(r.funnel[0].stage, "extract");
    EXPECT_EQ(r.funnel[0].docs_out, pool.size());  // extraction never drops
    EXPECT_EQ(r.funnel[1].stage, "heuristic_rules");
    EXPECT_EQ(r.funnel[1].docs_out, kept.size());
    EXPECT_EQ(r.funnel[2].stage, "dedup-bloom");
    EXPECT_EQ(r.funnel[2].docs_out, bff.corpus.size());
    EXPECT_EQ(r.funnel[3].stage, "quality-filter");
    EXPECT_EQ(r.funnel[3].docs_out, final_docs.corpus.size());
    EXPECT_EQ(r.corpus, final_docs.corpus);

    // survival percentages are against the original pool
    EXPECT_NEAR(r.funnel[3].survival_pct_of_original,
                100.0 * static_cast<double>(final_docs.corpus.size()) /
                    static_cast<double>(pool.size()),
                1e-9);
}

TEST(FullBaseline, KeepAllQualityStageIsIdentityOnLastStage) {
    SplitMixRng rng(515253);
    const Corpus pool = synthetic_pool(300, rng);
    BaselineConfig cfg;
    cfg.rules.word_count_min = 8;
    cfg.bff.expected_tokens = 100'000;
    cfg.classifier = quality_marker_model();
    cfg.keep_fraction = 1.0;
    const BaselineResult r = run_full_baseline(pool, cfg);
    EXPECT_EQ(r.funnel[3].docs_in, r.funnel[3].docs_out);
}

TEST(FullBaseline, SameSeedByteIdenticalAndWorkerInvariant) {
    SplitMixRng rng(616263);
    const Corpus pool = synthetic_pool(400, rng);
    BaselineConfig cfg;
    cfg.rules.word_count_min = 8;
    cfg.bff.expected_tokens = 100'000;
    cfg.classifier = quality_marker_model();
    cfg.shards = 4;
    cfg.workers = 1;

    testutil::TempDir tmp("baseline");
    const BaselineResult r1 = run_full_baseline(pool, cfg);
    write_jsonl(r1.corpus, tmp.path("run1.jsonl"));
    const BaselineResult r2 = run_full_baseline(pool, cfg);
    write_jsonl(r2.corpus, tmp.path("run2.jsonl"));
    cfg.workers = 8;
    const BaselineResult r3 = run_full_baseline(pool, cfg);
    write_jsonl(r3.corpus, tmp.path("run3.jsonl"));

    const std::string b1 = testutil::read_file_bytes(tmp.path("run1.jsonl"));
    EXPECT_EQ(b1, testutil::read_file_bytes(tmp.path("run2.jsonl")));
    EXPECT_EQ(b1, testutil::read_file_bytes(tmp.path("run3.jsonl")));
    EXPECT_FALSE(b1.empty());
}

TEST(ShippedConfigs, BaselinePipelineAndRulesProfileLoad) {
    const std::string root = CURATE_SOURCE_DIR;
    {
        std::ifstream f(root + "/configs/baseline.json");
        ASSERT_TRUE(f.is_open());
        std::stringstream buf;
        buf << f.rdbuf();
        const Pipeline p = load_pipeline_config(buf.str());
        ASSERT_EQ(p.stages().size(), 2u);
        ASSERT_EQ(p.globals().size(), 2u);
        EXPECT_EQ(p.stages()[0]->name(), "extract");
        EXPECT_EQ(p.globals()[0].name, "dedup-bloom");
        EXPECT_FALSE(p.globals()[1].shard_local);
    }
    {
        std::ifstream f(root + "/configs/rules_refinedweb.json");
        ASSERT_TRUE(f.is_open());
        nlohmann::json j;
        f >> j;
        const HeuristicRules rules = HeuristicRules::from_json(j);
        EXPECT_EQ(rules.word_count_min, 50u);
        EXPECT_EQ(rules.stop_word_hits_min, 2u);
        EXPECT_DOUBLE_EQ(rules.top_ngram_char_fraction_max[2], 0.16);
        // the profile keeps a plain well-formed document
        const Document good = doc("g",
            "The analysts reviewed the quarterly filings and noted that revenue kept pace "
            "with the broader market while costs have stayed level. The board will meet "
            "again to discuss the findings of the report and decide on a course of action "
            "for the next fiscal year with input from outside advisers and staff.");
        EXPECT_TRUE(heuristic_filter(good, rules).keep);
    }
}
