#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "curate/bff.hpp"
#include "curate/corpus.hpp"
#include "curate/dedup.hpp"
#include "curate/extract.hpp"
#include "curate/heuristics.hpp"
#include "curate/minhash.hpp"
#include "curate/quality.hpp"

namespace curate {

inline constexpr std::uint64_t kDefaultSeed = 42;

enum class MapperKind { Filter, Enricher, Modifier };

inline const char* to_string(MapperKind k) {
    switch (k) {
        case MapperKind::Filter: return "filter";
        case MapperKind::Enricher: return "enricher";
        case MapperKind::Modifier: return "modifier";
    }
    return "?";
}

inline MapperKind mapper_kind_from_string(const std::string& s) {
    if (s == "filter") return MapperKind::Filter;
    if (s == "enricher") return MapperKind::Enricher;
    if (s == "modifier") return MapperKind::Modifier;
    throw std::runtime_error("unknown mapper kind \"" + s + "\"");
}

/// A mapper broke its kind contract (a bug, not dirty data) — fatal.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Per-document transform. Filters keep or drop, Enrichers only extend
/// metadata, Modifiers may rewrite text or split documents. Instances are
/// shared read-only across workers and must hold no mutable state.
class Mapper {
public:
    Mapper(MapperKind kind, std::string name, nlohmann::json params = {})
        : kind_(kind), name_(std::move(name)), params_(std::move(params)) {}
    virtual ~Mapper() = default;

    MapperKind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    const nlohmann::json& params() const { return params_; }

    virtual std::vector<Document> apply(const Document& d) const = 0;

private:
    MapperKind kind_;
    std::string name_;
    nlohmann::json params_;
};

/// Run one mapper on one document with the kind contracts enforced.
inline std::vector<Document> apply_mapper(const Mapper& m, const Document& d) {
    std::vector<Document> out = m.apply(d);
    switch (m.kind()) {
        case MapperKind::Filter:
            if (out.size() > 1)
                throw ContractViolation(m.name() + ": a Filter returned multiple documents");
            if (out.size() == 1 && !(out[0] == d))
                throw ContractViolation(m.name() + ": a Filter must pass the document unchanged");
            break;
        case MapperKind::Enricher:
            if (out.size() != 1)
                throw ContractViolation(m.name() + ": an Enricher must return exactly one document");
            if (out[0].text != d.text || out[0].id != d.id || out[0].url != d.url ||
                out[0].source != d.source)
                throw ContractViolation(m.name() + ": an Enricher may only extend metadata");
            break;
        case MapperKind::Modifier:
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Built-in mappers
// ---------------------------------------------------------------------------

namespace mappers {

class MinWordCount final : public Mapper {
public:
    explicit MinWordCount(const nlohmann::json& params)
        : Mapper(MapperKind::Filter, "min_word_count", params),
          min_(params.value("min", std::uint64_t{1})),
          max_(params.value("max", std::numeric_limits<std::uint64_t>::max())) {}

    std::vector<Document> apply(const Document& d) const override {
        const std::size_t words = tok_.count(d.text);
        if (words < min_ || words > max_) return {};
        return {d};
    }

private:
    std::uint64_t min_, max_;
    Tokenizer tok_ = Tokenizer::unicode_words();
};

class HeuristicRulesFilter final : public Mapper {
public:
    explicit HeuristicRulesFilter(const nlohmann::json& params)
        : Mapper(MapperKind::Filter, "heuristic_rules", params),
          rules_(HeuristicRules::from_json(params)) {}

    std::vector<Document> apply(const Document& d) const override {
        if (heuristic_filter(d, rules_, tok_).keep) return {d};
        return {};
    }

private:
    HeuristicRules rules_;
    Tokenizer tok_ = Tokenizer::unicode_words();
};

class UrlBanlistFilter final : public Mapper {
public:
    explicit UrlBanlistFilter(const nlohmann::json& params)
        : Mapper(MapperKind::Filter, "url_banlist", params) {
        banlist_ = UrlBanlist::load(params.value("domains_file", ""),
                                    params.value("substrings_file", ""));
        if (params.contains("domains"))
            for (const auto& d : params["domains"])
                banlist_.banned_domains.insert(d.get<std::string>());
        if (params.contains("substrings"))
            for (const auto& s : params["substrings"])
                banlist_.banned_substrings.insert(s.get<std::string>());
    }

    std::vector<Document> apply(const Document& d) const override {
        if (url_filter(d, banlist_).keep) return {d};
        return {};
    }

private:
    UrlBanlist banlist_;
};

class TokenCountEnricher final : public Mapper {
public:
    explicit TokenCountEnricher(const nlohmann::json& params)
        : Mapper(MapperKind::Enricher, "token_count", params) {}

    std::vector<Document> apply(const Document& d) const override {
        Document out = d;
        out.metadata["token_count"] = std::to_string(tok_.count(d.text));
        return {out};
    }

private:
    Tokenizer tok_ = Tokenizer::unicode_words();
};

/// Stand-in for a real language identifier: tags documents whose letters are
/// mostly ASCII as "en", the rest as "und". Replace via register_mapper.
class LanguageStubEnricher final : public Mapper {
public:
    explicit LanguageStubEnricher(const nlohmann::json& params)
        : Mapper(MapperKind::Enricher, "language_stub", params) {}

    std::vector<Document> apply(const Document& d) const override {
        std::size_t ascii_letters = 0, non_ascii = 0;
        for (unsigned char c : d.text) {
            if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) ++ascii_letters;
            else if (c >= 0x80) ++non_ascii;
        }
        Document out = d;
        out.metadata["language"] = ascii_letters > non_ascii ? "en" : "und";
        return {out};
    }
};

class ExtractHtml final : public Mapper {
public:
    explicit ExtractHtml(const nlohmann::json& params)
        : Mapper(MapperKind::Modifier, "extract", params) {
        if (params.value("wet_style", false)) cfg_ = ExtractConfig::wet_style();
        if (params.contains("max_link_density"))
            cfg_.max_link_density = params["max_link_density"].get<double>();
        if (params.contains("min_short_line_words"))
            cfg_.min_short_line_words = params["min_short_line_words"].get<std::uint64_t>();
        if (params.contains("line_filters")) cfg_.line_filters = params["line_filters"].get<bool>();
    }

    std::vector<Document> apply(const Document& d) const override {
        Document out = d;
        out.text = extract_text(d.text, cfg_);
        return {out};
    }

private:
    ExtractConfig cfg_;
};

/// Split on blank lines into one document per paragraph block; children get
/// "#k" id suffixes. A document with a single block passes through as is.
class SplitParagraphs final : public Mapper {
public:
    explicit SplitParagraphs(const nlohmann::json& params)
        : Mapper(MapperKind::Modifier, "split_paragraphs", params) {}

    std::vector<Document> apply(const Document& d) const override {
        const auto blocks = detail::split_paragraphs(d.text);
        if (blocks.size() <= 1) return {d};
        std::vector<Document> out;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            Document child = d;
            child.id = d.id + "#" + std::to_string(i);
            child.text = std::string(blocks[i]);
            out.push_back(std::move(child));
        }
        return out;
    }
};

class NormalizeWhitespace final : public Mapper {
public:
    explicit NormalizeWhitespace(const nlohmann::json& params)
        : Mapper(MapperKind::Modifier, "normalize_whitespace", params) {}

    std::vector<Document> apply(const Document& d) const override {
        Document out = d;
        std::string text;
        bool pending_space = false;
        for (char c : d.text) {
            if (c == '\n') {
                while (!text.empty() && text.back() == ' ') text.pop_back();
                text += '\n';
                pending_space = false;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                pending_space = !text.empty() && text.back() != '\n';
            } else {
                if (pending_space) text += ' ';
                pending_space = false;
                text += c;
            }
        }
        while (!text.empty() && (text.back() == ' ' || text.back() == '\n')) text.pop_back();
        out.text = std::move(text);
        return {out};
    }
};

}  // namespace mappers

// ---------------------------------------------------------------------------
// Mapper registry
// ---------------------------------------------------------------------------

using MapperFactory = std::function<std::shared_ptr<Mapper>(const nlohmann::json&)>;

namespace detail {

struct Registry {
    std::map<std::pair<std::string, std::string>, MapperFactory> factories;  // (kind, name)

    static Registry& instance() {
        static Registry r;
        return r;
    }
};

}  // namespace detail

/// Hook for custom mappers: makes `name` loadable from pipeline configs.
inline void register_mapper(MapperKind kind, const std::string& name, MapperFactory factory) {
    detail::Registry::instance().factories[{to_string(kind), name}] = std::move(factory);
}

inline std::shared_ptr<Mapper> make_mapper(MapperKind kind, const std::string& name,
                                           const nlohmann::json& params) {
    if (kind == MapperKind::Filter) {
        if (name == "min_word_count") return std::make_shared<mappers::MinWordCount>(params);
        if (name == "heuristic_rules")
            return std::make_shared<mappers::HeuristicRulesFilter>(params);
        if (name == "url_banlist") return std::make_shared<mappers::UrlBanlistFilter>(params);
    } else if (kind == MapperKind::Enricher) {
        if (name == "token_count") return std::make_shared<mappers::TokenCountEnricher>(params);
        if (name == "language_stub")
            return std::make_shared<mappers::LanguageStubEnricher>(params);
    } else {
        if (name == "extract") return std::make_shared<mappers::ExtractHtml>(params);
        if (name == "split_paragraphs") return std::make_shared<mappers::SplitParagraphs>(params);
        if (name == "normalize_whitespace")
            return std::make_shared<mappers::NormalizeWhitespace>(params);
    }
    const auto& reg = detail::Registry::instance().factories;
    if (auto it = reg.find({to_string(kind), name}); it != reg.end()) return it->second(params);
    throw std::runtime_error("unknown " + std::string(to_string(kind)) + " stage \"" + name +
                             "\"");
}

// ---------------------------------------------------------------------------
// Pipeline and reports
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& known_global_stages() {
    static const std::vector<std::string> names = {"dedup-exact", "dedup-bloom", "dedup-minhash",
                                                   "dedup-suffix", "quality-filter"};
    return names;
}

struct GlobalStage {
    std::string name;
    nlohmann::json params;
    bool shard_local = true;  // corpus-global stages run once over everything
};

class Pipeline {
public:
    Pipeline& add_stage(std::shared_ptr<const Mapper> m) {
        for (const auto& s : stages_)
            if (s->name() == m->name())
                throw std::runtime_error("duplicate stage name \"" + m->name() + "\"");
        stages_.push_back(std::move(m));
        return *this;
    }

    Pipeline& add_global(GlobalStage g) {
        bool known = false;
        for (const auto& n : known_global_stages()) known |= (n == g.name);
        if (!known) throw std::runtime_error("unknown global stage \"" + g.name + "\"");
        globals_.push_back(std::move(g));
        return *this;
    }

    const std::vector<std::shared_ptr<const Mapper>>& stages() const { return stages_; }
    const std::vector<GlobalStage>& globals() const { return globals_; }

    bool all_globals_shard_local() const {
        for (const auto& g : globals_)
            if (!g.shard_local) return false;
        return true;
    }

    /// Parse {"stages":[{kind,name,params}...], "globals":[{name,params,scope}...]}.
    /// Unknown stage names are rejected here, not at run time.
    static Pipeline from_json(const nlohmann::json& j) {
        Pipeline p;
        if (j.contains("stages")) {
            std::size_t i = 0;
            for (const auto& stage : j["stages"]) {
                if (!stage.contains("kind") || !stage.contains("name"))
                    throw std::runtime_error("stages[" + std::to_string(i) +
                                             "]: needs \"kind\" and \"name\"");
                const MapperKind kind =
                    mapper_kind_from_string(stage["kind"].get<std::string>());
                try {
                    p.add_stage(make_mapper(kind, stage["name"].get<std::string>(),
                                            stage.value("params", nlohmann::json::object())));
                } catch (const std::exception& e) {
                    throw std::runtime_error("stages[" + std::to_string(i) + "]: " + e.what());
                }
                ++i;
            }
        }
        if (j.contains("globals")) {
            std::size_t i = 0;
            for (const auto& g : j["globals"]) {
                if (!g.contains("name"))
                    throw std::runtime_error("globals[" + std::to_string(i) + "]: needs \"name\"");
                GlobalStage stage;
                stage.name = g["name"].get<std::string>();
                stage.params = g.value("params", nlohmann::json::object());
                const std::string scope = g.value("scope", "shard-local");
                if (scope == "shard-local") stage.shard_local = true;
                else if (scope == "corpus-global") stage.shard_local = false;
                else
                    throw std::runtime_error("globals[" + std::to_string(i) +
                                             "]: bad scope \"" + scope + "\"");
                try {
                    p.add_global(std::move(stage));
                } catch (const std::exception& e) {
                    throw std::runtime_error("globals[" + std::to_string(i) + "]: " + e.what());
                }
                ++i;
            }
        }
        return p;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["stages"] = nlohmann::json::array();
        for (const auto& s : stages_)
            j["stages"].push_back({{"kind", to_string(s->kind())},
                                   {"name", s->name()},
                                   {"params", s->params().is_null() ? nlohmann::json::object()
                                                                    : s->params()}});
        j["globals"] = nlohmann::json::array();
        for (const auto& g : globals_)
            j["globals"].push_back({{"name", g.name},
                                    {"params", g.params.is_null() ? nlohmann::json::object()
                                                                  : g.params},
                                    {"scope", g.shard_local ? "shard-local" : "corpus-global"}});
        return j;
    }

private:
    std::vector<std::shared_ptr<const Mapper>> stages_;
    std::vector<GlobalStage> globals_;
};

inline Pipeline load_pipeline_config(const std::string& text) {
    return Pipeline::from_json(nlohmann::json::parse(text));
}

struct StageReport {
    std::string stage;
    std::uint64_t docs_in = 0;
    std::uint64_t docs_out = 0;
    std::uint64_t tokens_in = 0;
    std::uint64_t tokens_out = 0;
    std::uint64_t errors = 0;
    double wall_ms = 0.0;

    double removal_rate() const {
        if (docs_in == 0) return 0.0;
        return 1.0 - static_cast<double>(docs_out) / static_cast<double>(docs_in);
    }
};

struct ExecutionReport {
    std::vector<StageReport> stages;
    std::uint64_t seed = kDefaultSeed;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["seed"] = seed;
        j["stages"] = nlohmann::json::array();
        for (const auto& s : stages)
            j["stages"].push_back({{"stage", s.stage},
                                   {"docs_in", s.docs_in},
                                   {"docs_out", s.docs_out},
                                   {"tokens_in", s.tokens_in},
                                   {"tokens_out", s.tokens_out},
                                   {"errors", s.errors},
                                   {"removal_rate", s.removal_rate()},
                                   {"wall_ms", s.wall_ms}});
        return j;
    }

    /// Sum counters stage-by-stage (associative and commutative).
    void merge_from(const ExecutionReport& other) {
        if (stages.empty()) {
            stages = other.stages;
            return;
        }
        if (stages.size() != other.stages.size())
            throw std::logic_error("ExecutionReport::merge_from: stage mismatch");
        for (std::size_t i = 0; i < stages.size(); ++i) {
            StageReport& a = stages[i];
            const StageReport& b = other.stages[i];
            if (a.stage != b.stage)
                throw std::logic_error("ExecutionReport::merge_from: stage name mismatch");
            a.docs_in += b.docs_in;
            a.docs_out += b.docs_out;
            a.tokens_in += b.tokens_in;
            a.tokens_out += b.tokens_out;
            a.errors += b.errors;
            a.wall_ms += b.wall_ms;
        }
    }
};

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t corpus_tokens(const Corpus& docs, const Tokenizer& tok) {
    std::uint64_t total = 0;
    for (const Document& d : docs) total += tok.count(d.text);
    return total;
}

/// One corpus-level operation. Fresh state (e.g. the Bloom filter) per call.
inline Corpus apply_global_stage(const GlobalStage& g, Corpus docs, std::uint64_t seed,
                                 std::uint64_t* errors = nullptr) {
    if (g.name == "dedup-exact") {
        const std::string key = g.params.value("key", "raw");
        if (key != "raw" && key != "normalized")
            throw std::runtime_error("dedup-exact: bad key \"" + key + "\"");
        return exact_dedup(docs,
                           key == "raw" ? DedupKey::RawText : DedupKey::NormalizedText);
    }
    if (g.name == "dedup-bloom") {
        BffConfig cfg;
        cfg.min_ngram_size = g.params.value("min_ngram", std::uint64_t{13});
        cfg.max_ngram_size = g.params.value("max_ngram", std::uint64_t{13});
        cfg.threshold = g.params.value("threshold", 0.8);
        cfg.eps = g.params.value("fpr", 0.01);
        cfg.expected_tokens = g.params.value("expected_tokens", std::uint64_t{1} << 22);
        BloomFilter filter = cfg.make_filter(seed);
        auto r = bff_process_corpus(docs, filter, cfg);
        if (!g.params.value("filter_out", std::string{}).empty())
            filter.save(g.params["filter_out"].get<std::string>());
        return std::move(r.corpus);
    }
    if (g.name == "dedup-minhash") {
        MinHashConfig cfg;
        cfg.ngram_size = g.params.value("ngram", std::uint64_t{5});
        cfg.buckets = g.params.value("buckets", 93u);
        cfg.rows = g.params.value("rows", 15u);
        cfg.seed = g.params.value("seed", seed);
        // documents too short to sign are passed through untouched
        Corpus signable, out;
        std::vector<MinHashSignature> sigs;
        Tokenizer tok = Tokenizer::unicode_words();
        std::set<std::string> drop;
        for (const Document& d : docs)
            if (tok.count(d.text) > 0) sigs.push_back(minhash_signature(d, cfg, tok));
        for (const auto& cluster : minhash_cluster(sigs, cfg))
            for (const auto& id : cluster.members)
                if (id != cluster.retained) drop.insert(id);
        for (const Document& d : docs)
            if (!drop.count(d.id)) out.push_back(d);
        return out;
    }
    if (g.name == "dedup-suffix") {
        SuffixDedupConfig cfg;
        cfg.min_run = g.params.value("min_run", std::uint64_t{50});
        return suffix_dedup(docs, cfg);
    }
    if (g.name == "quality-filter") {
        const double keep = g.params.value("keep_fraction", 0.10);
        const std::string model_file = g.params.value("model_file", "");
        if (model_file.empty())
            throw std::runtime_error("quality-filter: needs \"model_file\"");
        ClassifierScorer scorer(NgramClassifier::load(model_file));
        auto r = quality_filter(docs, scorer, keep);
        if (errors) *errors += r.scorer_errors;
        return std::move(r.corpus);
    }
    throw std::runtime_error("unknown global stage \"" + g.name + "\"");
}

}  // namespace detail

struct PipelineRunResult {
    Shard shard;
    ExecutionReport report;
};

/// Run mapper stages document-by-document in stable order, then the global
/// stages at the barrier after them. Per-document mapper failures drop the
/// document and count as errors; contract violations and global-stage
/// failures are fatal.
inline PipelineRunResult run_pipeline(const Pipeline& p, Shard shard,
                                      std::uint64_t seed = kDefaultSeed) {
    const Tokenizer report_tok = Tokenizer::unicode_words();
    ExecutionReport report;
    report.seed = seed;

    Corpus current = std::move(shard.documents);
    for (const auto& stage : p.stages()) {
        const auto t0 = std::chrono::steady_clock::now();
        StageReport sr;
        sr.stage = stage->name();
        sr.docs_in = current.size();
        sr.tokens_in = detail::corpus_tokens(current, report_tok);
        Corpus next;
        next.reserve(current.size());
        for (const Document& d : current) {
            try {
                for (Document& out : apply_mapper(*stage, d)) next.push_back(std::move(out));
            } catch (const ContractViolation&) {
                throw;
            } catch (const std::exception&) {
                ++sr.errors;  // drop-and-count
            }
        }
        sr.docs_out = next.size();
        sr.tokens_out = detail::corpus_tokens(next, report_tok);
        sr.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        report.stages.push_back(std::move(sr));
        current = std::move(next);
    }

    for (const auto& g : p.globals()) {
        const auto t0 = std::chrono::steady_clock::now();
        StageReport sr;
        sr.stage = g.name;
        sr.docs_in = current.size();
        sr.tokens_in = detail::corpus_tokens(current, report_tok);
        current = detail::apply_global_stage(g, std::move(current), seed, &sr.errors);
        sr.docs_out = current.size();
        sr.tokens_out = detail::corpus_tokens(current, report_tok);
        sr.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        report.stages.push_back(std::move(sr));
    }

    shard.documents = std::move(current);
    return {std::move(shard), std::move(report)};
}

struct ShardedRunResult {
    Corpus corpus;
    ExecutionReport report;
};

/// Run shards across a worker pool. Shard-local globals run inside each
/// shard; corpus-global ones run once over the merged result. Output is
/// assembled in shard-index order, so it does not depend on the worker count
/// or scheduling.
inline ShardedRunResult run_sharded(const Pipeline& p, std::vector<Shard> shards,
                                    std::size_t workers, std::uint64_t seed = kDefaultSeed) {
    if (workers < 1) throw std::invalid_argument("run_sharded: workers must be >= 1");

    Pipeline per_shard;
    for (const auto& s : p.stages()) per_shard.add_stage(s);
    std::vector<GlobalStage> corpus_globals;
    for (const auto& g : p.globals()) {
        if (g.shard_local) per_shard.add_global(g);
        else corpus_globals.push_back(g);
    }

    std::vector<PipelineRunResult> results(shards.size());
    std::atomic<std::size_t> next_shard{0};
    std::mutex failure_mutex;
    std::exception_ptr failure;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next_shard.fetch_add(1);
            if (i >= shards.size()) return;
            try {
                results[i] = run_pipeline(per_shard, std::move(shards[i]), seed);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    {
        std::vector<std::thread> pool;
        const std::size_t n = std::min(workers, std::max<std::size_t>(shards.size(), 1));
        pool.reserve(n);
        for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    ShardedRunResult out;
    out.report.seed = seed;
    for (auto& r : results) {
        out.corpus.insert(out.corpus.end(), r.shard.documents.begin(), r.shard.documents.end());
        out.report.merge_from(r.report);
    }

    const Tokenizer report_tok = Tokenizer::unicode_words();
    for (const auto& g : corpus_globals) {
        const auto t0 = std::chrono::steady_clock::now();
        StageReport sr;
        sr.stage = g.name;
        sr.docs_in = out.corpus.size();
        sr.tokens_in = detail::corpus_tokens(out.corpus, report_tok);
        out.corpus = detail::apply_global_stage(g, std::move(out.corpus), seed, &sr.errors);
        sr.docs_out = out.corpus.size();
        sr.tokens_out = detail::corpus_tokens(out.corpus, report_tok);
        sr.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
        out.report.stages.push_back(std::move(sr));
    }
    return out;
}

}  // namespace curate
