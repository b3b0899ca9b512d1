// curate: corpus curation toolkit over JSONL corpora.
//
// Exit codes: 0 success, 1 usage error, 2 data error.
// Data goes to files or stdout; diagnostics go to stderr only.

#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curate/curate.hpp"

namespace {

using namespace curate;

struct CommonIo {
    std::string input;
    std::string output;
    std::string report_path;
    std::uint64_t seed = kDefaultSeed;
    std::size_t workers = 1;
};

void add_io(CLI::App* cmd, CommonIo& io, bool needs_output) {
    cmd->add_option("input,--input", io.input, "input corpus (.jsonl or .jsonl.gz)")
        ->required();
    auto* out = cmd->add_option("--output", io.output, "output corpus path");
    if (needs_output) out->required();
    cmd->add_option("--report", io.report_path, "write a JSON run report here");
    cmd->add_option("--seed", io.seed, "deterministic seed (printed in reports)");
    cmd->add_option("--workers", io.workers, "worker threads")->check(CLI::PositiveNumber);
}

Corpus read_input(const CommonIo& io, std::size_t* line_errors = nullptr) {
    auto r = read_jsonl(io.input);
    if (line_errors) *line_errors = r.errors.size();
    for (const auto& e : r.errors)
        std::cerr << "warning: " << e.file << ":" << e.line_number << ": " << e.message << "\n";
    return std::move(r.documents);
}

void write_report(const std::string& path, const nlohmann::json& j) {
    if (path.empty()) return;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write report " + path);
    f << j.dump(2) << "\n";
}

/// Single-stage ExecutionReport for plain subcommands.
nlohmann::json stage_report_json(const std::string& stage, const Corpus& in, const Corpus& out,
                                 std::uint64_t errors, std::uint64_t seed) {
    const Tokenizer tok = Tokenizer::unicode_words();
    StageReport sr;
    sr.stage = stage;
    sr.docs_in = in.size();
    sr.docs_out = out.size();
    sr.tokens_in = detail::corpus_tokens(in, tok);
    sr.tokens_out = detail::corpus_tokens(out, tok);
    sr.errors = errors;
    ExecutionReport report;
    report.seed = seed;
    report.stages.push_back(sr);
    return report.to_json();
}

std::vector<EvalSample> load_evalset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open eval set " + path);
    std::vector<EvalSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            samples.push_back(EvalSample::from_json(nlohmann::json::parse(line)));
            if (samples.back().id.empty())
                samples.back().id = path + ":" + std::to_string(line_no);
        } catch (const std::exception& e) {
            std::cerr << "warning: " << path << ":" << line_no << ": " << e.what() << "\n";
        }
    }
    return samples;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    nlohmann::json j;
    f >> j;
    return j;
}

// --- subcommand runners (invoked after parse; throw for data errors) -----

int run_extract(const CommonIo& io, bool wet, double max_link_density,
                std::size_t min_short_line_words) {
    std::size_t line_errors = 0;
    const Corpus in = read_input(io, &line_errors);
    ExtractConfig cfg = wet ? ExtractConfig::wet_style() : ExtractConfig{};
    if (!wet) {
        cfg.max_link_density = max_link_density;
        cfg.min_short_line_words = min_short_line_words;
    }
    Corpus out;
    out.reserve(in.size());
    for (const Document& d : in) {
        Document e = d;
        e.text = extract_text(d.text, cfg);
        out.push_back(std::move(e));
    }
    write_jsonl(out, io.output);
    write_report(io.report_path, stage_report_json("extract", in, out, line_errors, io.seed));
    return 0;
}

int run_filter(const CommonIo& io, const std::string& rules_path,
               const std::string& domains_path, const std::string& substrings_path) {
    const Corpus in = read_input(io);
    HeuristicRules rules;
    if (!rules_path.empty()) rules = HeuristicRules::from_json(load_json_file(rules_path));
    UrlBanlist banlist;
    if (!domains_path.empty() || !substrings_path.empty())
        banlist = UrlBanlist::load(domains_path, substrings_path);

    Corpus out;
    std::map<std::string, std::size_t> drop_reasons;
    for (const Document& d : in) {
        FilterDecision dec = url_filter(d, banlist);
        if (dec.keep) dec = heuristic_filter(d, rules);
        if (dec.keep) out.push_back(d);
        else ++drop_reasons[dec.reason];
    }
    write_jsonl(out, io.output);
    nlohmann::json j = stage_report_json("filter", in, out, 0, io.seed);
    j["drop_reasons"] = drop_reasons;
    write_report(io.report_path, j);
    return 0;
}

int run_dedup_exact(const CommonIo& io, const std::string& key) {
    if (key != "raw" && key != "normalized")
        throw std::runtime_error("--key must be raw or normalized");
    const Corpus in = read_input(io);
    const Corpus out =
        exact_dedup(in, key == "raw" ? DedupKey::RawText : DedupKey::NormalizedText);
    write_jsonl(out, io.output);
    write_report(io.report_path, stage_report_json("dedup-exact", in, out, 0, io.seed));
    return 0;
}

int run_dedup_bloom(const CommonIo& io, const BffConfig& cfg, const std::string& filter_in,
                    const std::string& filter_out) {
    cfg.validate();
    const Corpus in = read_input(io);
    BloomFilter filter = filter_in.empty() ? cfg.make_filter(io.seed)
                                           : BloomFilter::load(filter_in);
    auto r = bff_process_corpus(in, filter, cfg);
    if (!filter_out.empty()) filter.save(filter_out);
    write_jsonl(r.corpus, io.output);
    nlohmann::json j = stage_report_json("dedup-bloom", in, r.corpus, 0, io.seed);
    j["paragraphs_removed"] = r.paragraphs_removed;
    write_report(io.report_path, j);
    return 0;
}

int run_dedup_minhash(const CommonIo& io, const MinHashConfig& cfg) {
    const Corpus in = read_input(io);
    // pass empty documents straight through; they cannot be signed
    Corpus signable;
    Corpus out;
    const Tokenizer tok = Tokenizer::unicode_words();
    std::vector<MinHashSignature> sigs;
    for (const Document& d : in)
        if (tok.count(d.text) > 0) sigs.push_back(minhash_signature(d, cfg, tok));
    std::set<std::string> drop;
    for (const auto& cluster : minhash_cluster(sigs, cfg))
        for (const auto& id : cluster.members)
            if (id != cluster.retained) drop.insert(id);
    for (const Document& d : in)
        if (!drop.count(d.id)) out.push_back(d);
    write_jsonl(out, io.output);
    write_report(io.report_path, stage_report_json("dedup-minhash", in, out, 0, io.seed));
    return 0;
}

int run_dedup_suffix(const CommonIo& io, std::size_t min_run) {
    const Corpus in = read_input(io);
    SuffixDedupConfig cfg;
    cfg.min_run = min_run;
    const Corpus out = suffix_dedup(in, cfg);
    write_jsonl(out, io.output);
    write_report(io.report_path, stage_report_json("dedup-suffix", in, out, 0, io.seed));
    return 0;
}

int run_quality_train(const std::string& pos_path, const std::string& neg_path,
                      const std::string& model_path, ClassifierConfig cfg,
                      const std::string& report_path) {
    auto pos = read_jsonl(pos_path);
    auto neg = read_jsonl(neg_path);
    TrainReport report;
    const NgramClassifier model =
        train_classifier(pos.documents, neg.documents, cfg, &report);
    model.save(model_path);
    std::cerr << "trained on " << report.positives << " positive / " << report.negatives
              << " negative docs, train accuracy " << report.train_accuracy << "\n";
    write_report(report_path, {{"positives", report.positives},
                               {"negatives", report.negatives},
                               {"train_accuracy", report.train_accuracy}});
    return 0;
}

int run_quality_score(const CommonIo& io, const std::string& model_path) {
    const Corpus in = read_input(io);
    const NgramClassifier model = NgramClassifier::load(model_path);
    Corpus out;
    out.reserve(in.size());
    for (const Document& d : in) {
        Document s = d;
        std::ostringstream oss;
        oss << score_document(model, d);
        s.metadata["quality_score"] = oss.str();
        out.push_back(std::move(s));
    }
    write_jsonl(out, io.output);
    write_report(io.report_path, stage_report_json("quality-score", in, out, 0, io.seed));
    return 0;
}

int run_quality_filter_cmd(const CommonIo& io, const std::string& model_path, double keep) {
    const Corpus in = read_input(io);
    ClassifierScorer scorer(NgramClassifier::load(model_path));
    auto r = quality_filter(in, scorer, keep);
    write_jsonl(r.corpus, io.output);
    nlohmann::json j =
        stage_report_json("quality-filter", in, r.corpus, r.scorer_errors, io.seed);
    j["threshold"] = r.threshold;
    write_report(io.report_path, j);
    return 0;
}

/// Q&A pairing in the style of the reference-data recipe: keep posts with
/// score >= min_post_score, >= min_comments comments, best comment score >=
/// min_comment_score (ties to the longest), emit post + best answer.
int run_quality_prep_qa(const CommonIo& io, int min_post_score, int min_comment_score,
                        int min_comments) {
    std::ifstream f(io.input);
    if (!f) throw std::runtime_error("cannot open " + io.input);
    Corpus out;
    std::string line;
    std::size_t line_no = 0, skipped = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            std::cerr << "warning: " << io.input << ":" << line_no << ": " << e.what() << "\n";
            continue;
        }
        const std::string post = j.value("post", j.value("question", ""));
        const int post_score = j.value("score", 0);
        if (post.empty() || !j.contains("comments") || !j["comments"].is_array()) {
            ++skipped;
            continue;
        }
        const auto& comments = j["comments"];
        if (post_score < min_post_score ||
            comments.size() < static_cast<std::size_t>(min_comments)) {
            ++skipped;
            continue;
        }
        std::string best_text;
        int best_score = INT_MIN;
        for (const auto& c : comments) {
            const std::string text = c.value("text", "");
            const int score = c.value("score", 0);
            if (score > best_score ||
                (score == best_score && text.size() > best_text.size())) {
                best_score = score;
                best_text = text;
            }
        }
        if (best_score < min_comment_score || best_text.empty()) {
            ++skipped;
            continue;
        }
        Document d;
        d.id = j.value("id", io.input + ":" + std::to_string(line_no));
        d.text = post + "\n\n" + best_text;
        d.source = "qa";
        out.push_back(std::move(d));
    }
    write_jsonl(out, io.output);
    std::cerr << "kept " << out.size() << " q&a pairs, skipped " << skipped << "\n";
    write_report(io.report_path,
                 {{"kept", out.size()}, {"skipped", skipped}, {"seed", io.seed}});
    return 0;
}

int run_decontam_measure(const CommonIo& io, const std::string& eval_path, std::size_t n) {
    const Corpus corpus = read_input(io);
    const auto samples = load_evalset(eval_path);
    const OverlapIndex idx = build_overlap_index(corpus, n);
    const ContaminationReport report = contamination_fractions(samples, idx);
    const nlohmann::json j = report.to_json();
    if (io.report_path.empty()) std::cout << j.dump(2) << "\n";
    else write_report(io.report_path, j);
    return 0;
}

int run_decontam_flag(const CommonIo& io, const std::string& eval_path, bool case_insensitive) {
    const Corpus corpus = read_input(io);
    const auto samples = load_evalset(eval_path);
    FlagStats stats;
    nlohmann::json flagged = nlohmann::json::array();
    std::size_t flagged_docs = 0;
    for (const Document& d : corpus) {
        const auto matches = flag_qa_overlap(d, samples, case_insensitive, &stats);
        if (matches.empty()) continue;
        ++flagged_docs;
        nlohmann::json entry;
        entry["doc_id"] = d.id;
        entry["samples"] = nlohmann::json::array();
        for (const auto& m : matches) entry["samples"].push_back(m.sample_id);
        flagged.push_back(std::move(entry));
    }
    nlohmann::json j;
    j["documents"] = corpus.size();
    j["flagged_documents"] = flagged_docs;
    j["percent_flagged"] =
        corpus.empty() ? 0.0
                       : 100.0 * static_cast<double>(flagged_docs) /
                             static_cast<double>(corpus.size());
    j["samples_skipped"] = stats.samples_skipped;
    j["flags"] = std::move(flagged);
    if (io.report_path.empty()) std::cout << j.dump(2) << "\n";
    else write_report(io.report_path, j);
    return 0;
}

int run_decontam_excise(const CommonIo& io, const std::string& eval_path,
                        bool case_insensitive) {
    const Corpus corpus = read_input(io);
    const auto samples = load_evalset(eval_path);
    Corpus out;
    out.reserve(corpus.size());
    std::size_t flagged_docs = 0;
    for (const Document& d : corpus) {
        const auto matches = flag_qa_overlap(d, samples, case_insensitive);
        if (matches.empty()) {
            out.push_back(d);
        } else {
            ++flagged_docs;
            out.push_back(excise_matches(d, matches));
        }
    }
    write_jsonl(out, io.output);
    nlohmann::json j = stage_report_json("decontam-excise", corpus, out, 0, io.seed);
    j["flagged_documents"] = flagged_docs;
    write_report(io.report_path, j);
    return 0;
}

int run_mix(const std::string& spec_path, const CommonIo& io) {
    const nlohmann::json spec_json = load_json_file(spec_path);
    MixSpec spec;
    spec.target_tokens = spec_json.value("target_tokens", std::uint64_t{0});
    spec.seed = spec_json.value("seed", io.seed);
    if (!spec_json.contains("entries")) throw std::runtime_error("mix spec: needs \"entries\"");
    for (const auto& e : spec_json["entries"]) {
        MixEntry entry;
        entry.label = e.value("label", "");
        entry.weight = e.value("weight", 0.0);
        if (entry.label.empty()) throw std::runtime_error("mix spec: entry without label");
        auto r = read_jsonl(e.value("path", ""));
        entry.documents = std::move(r.documents);
        spec.entries.push_back(std::move(entry));
    }
    const Tokenizer tok = Tokenizer::unicode_words();
    const Corpus out = mix_sources(spec, tok);
    write_jsonl(out, io.output);
    const auto report = mixture_report(out, tok);
    nlohmann::json j = report.to_json();
    j["seed"] = spec.seed;
    if (io.report_path.empty()) std::cerr << "mixed " << out.size() << " documents\n";
    else write_report(io.report_path, j);
    return 0;
}

int run_stats(const CommonIo& io, const std::string& scores_path) {
    nlohmann::json j;
    if (!scores_path.empty()) {
        // benchmark-score aggregation: [{"task","accuracy","baseline"}]
        const nlohmann::json scores = load_json_file(scores_path);
        std::vector<TaskScore> tasks;
        nlohmann::json per_task = nlohmann::json::array();
        for (const auto& t : scores) {
            TaskScore ts{t.value("task", ""), t.value("accuracy", 0.0),
                         t.value("baseline", 0.0)};
            tasks.push_back(ts);
            per_task.push_back({{"task", ts.task},
                                {"accuracy", ts.accuracy},
                                {"baseline", ts.random_baseline},
                                {"centered", centered_accuracy(ts.accuracy, ts.random_baseline)}});
        }
        j["tasks"] = std::move(per_task);
        j["aggregate_centered_accuracy"] = aggregate_core(tasks);
    } else {
        std::size_t line_errors = 0;
        const Corpus in = read_input(io, &line_errors);
        const CorpusStats st = corpus_stats(in, Tokenizer::unicode_words());
        j["doc_count"] = st.doc_count;
        j["total_tokens"] = st.total_tokens;
        j["mean_tokens_per_doc"] = st.mean_tokens_per_doc;
        j["median_tokens_per_doc"] = st.median_tokens_per_doc;
        j["line_errors"] = line_errors;
        const auto mix = mixture_report(in, Tokenizer::unicode_words());
        j["sources"] = mix.to_json()["sources"];
    }
    j["seed"] = io.seed;
    if (io.report_path.empty()) std::cout << j.dump(2) << "\n";
    else write_report(io.report_path, j);
    return 0;
}

int run_pipeline_cmd(const CommonIo& io, const std::string& config_path, std::size_t shards) {
    std::ifstream f(config_path);
    if (!f) throw std::runtime_error("cannot open config " + config_path);
    std::stringstream buf;
    buf << f.rdbuf();
    const Pipeline p = load_pipeline_config(buf.str());
    const Corpus in = read_input(io);
    auto sharded = shard_corpus(in, shards, ShardPolicy::RoundRobin);
    ShardedRunResult r = run_sharded(p, std::move(sharded), io.workers, io.seed);
    write_jsonl(r.corpus, io.output);
    write_report(io.report_path, r.report.to_json());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curate: corpus curation toolkit (JSONL in, JSONL out)"};
    app.require_subcommand(1);

    // extract
    CommonIo extract_io;
    bool extract_wet = false;
    double extract_link_density = ExtractConfig{}.max_link_density;
    std::size_t extract_min_words = ExtractConfig{}.min_short_line_words;
    auto* cmd_extract = app.add_subcommand("extract", "HTML to plain text");
    add_io(cmd_extract, extract_io, true);
    cmd_extract->add_flag("--wet", extract_wet, "WET-style extraction (keep boilerplate)");
    cmd_extract->add_option("--max-link-density", extract_link_density,
                            "drop lines above this anchor-text fraction");
    cmd_extract->add_option("--min-short-line-words", extract_min_words,
                            "navigation-lexicon drop applies below this word count");

    // filter
    CommonIo filter_io;
    std::string rules_path, domains_path, substrings_path;
    auto* cmd_filter = app.add_subcommand("filter", "heuristic quality rules + URL banlist");
    add_io(cmd_filter, filter_io, true);
    cmd_filter->add_option("--rules", rules_path, "rules profile JSON");
    cmd_filter->add_option("--domains", domains_path, "banned domains file");
    cmd_filter->add_option("--substrings", substrings_path, "banned URL substrings file");

    // dedup-exact
    CommonIo exact_io;
    std::string exact_key = "raw";
    auto* cmd_exact = app.add_subcommand("dedup-exact", "exact document dedup");
    add_io(cmd_exact, exact_io, true);
    cmd_exact->add_option("--key", exact_key, "raw | normalized");

    // dedup-bloom
    CommonIo bloom_io;
    BffConfig bff_cfg;
    std::string filter_in, filter_out;
    auto* cmd_bloom = app.add_subcommand("dedup-bloom", "paragraph+document Bloom dedup");
    add_io(cmd_bloom, bloom_io, true);
    cmd_bloom->add_option("--min-ngram", bff_cfg.min_ngram_size, "minimum n-gram size");
    cmd_bloom->add_option("--max-ngram", bff_cfg.max_ngram_size, "maximum n-gram size");
    cmd_bloom->add_option("--threshold", bff_cfg.threshold, "containment threshold");
    cmd_bloom->add_option("--fpr", bff_cfg.eps, "false positive rate");
    cmd_bloom->add_option("--expected-tokens", bff_cfg.expected_tokens,
                          "corpus token estimate for sizing");
    cmd_bloom->add_option("--filter-in", filter_in, "resume from a BFF1 snapshot");
    cmd_bloom->add_option("--filter-out", filter_out, "write the BFF1 snapshot here");

    // dedup-minhash
    CommonIo minhash_io;
    MinHashConfig mh_cfg;
    auto* cmd_minhash = app.add_subcommand("dedup-minhash", "MinHash LSH near-dedup");
    add_io(cmd_minhash, minhash_io, true);
    cmd_minhash->add_option("--ngram", mh_cfg.ngram_size, "shingle size in tokens");
    cmd_minhash->add_option("--buckets", mh_cfg.buckets, "LSH buckets (b)");
    cmd_minhash->add_option("--rows", mh_cfg.rows, "rows per bucket (r)");

    // dedup-suffix
    CommonIo suffix_io;
    std::size_t min_run = 50;
    auto* cmd_suffix = app.add_subcommand("dedup-suffix", "repeated-substring removal");
    add_io(cmd_suffix, suffix_io, true);
    cmd_suffix->add_option("--min-run", min_run, "minimum repeated run in tokens");

    // quality
    auto* cmd_quality = app.add_subcommand("quality", "model-based quality filtering");
    cmd_quality->require_subcommand(1);
    std::string q_pos, q_neg, q_model, q_train_report;
    ClassifierConfig q_cfg;
    bool q_unigrams_only = false;
    auto* cmd_qtrain = cmd_quality->add_subcommand("train", "train the n-gram classifier");
    cmd_qtrain->add_option("--pos", q_pos, "positive-class JSONL")->required();
    cmd_qtrain->add_option("--neg", q_neg, "negative-class JSONL")->required();
    cmd_qtrain->add_option("--model", q_model, "model output path")->required();
    cmd_qtrain->add_option("--buckets", q_cfg.bucket_count, "hashed feature buckets");
    cmd_qtrain->add_option("--epochs", q_cfg.epochs, "SGD epochs");
    cmd_qtrain->add_option("--lr", q_cfg.learning_rate, "learning rate");
    cmd_qtrain->add_option("--train-seed", q_cfg.seed, "shuffle seed");
    cmd_qtrain->add_flag("--unigrams-only", q_unigrams_only, "disable bigram features");
    cmd_qtrain->add_option("--report", q_train_report, "write a JSON report here");

    CommonIo qscore_io;
    std::string qscore_model;
    auto* cmd_qscore = cmd_quality->add_subcommand("score", "attach quality_score metadata");
    add_io(cmd_qscore, qscore_io, true);
    cmd_qscore->add_option("--model", qscore_model, "NGC1 model file")->required();

    CommonIo qfilter_io;
    std::string qfilter_model;
    double q_keep = 0.10;
    auto* cmd_qfilter = cmd_quality->add_subcommand("filter", "keep the top fraction by score");
    add_io(cmd_qfilter, qfilter_io, true);
    cmd_qfilter->add_option("--model", qfilter_model, "NGC1 model file")->required();
    cmd_qfilter->add_option("--keep", q_keep, "fraction to keep (0, 1]");

    CommonIo qprep_io;
    int prep_post_score = 3, prep_comment_score = 5, prep_min_comments = 3;
    auto* cmd_qprep =
        cmd_quality->add_subcommand("prep-qa", "pair posts with their best answers");
    add_io(cmd_qprep, qprep_io, true);
    cmd_qprep->add_option("--min-post-score", prep_post_score, "minimum post karma");
    cmd_qprep->add_option("--min-comment-score", prep_comment_score, "minimum answer karma");
    cmd_qprep->add_option("--min-comments", prep_min_comments, "minimum comment count");

    // decontam
    auto* cmd_decontam = app.add_subcommand("decontam", "benchmark contamination tooling");
    cmd_decontam->require_subcommand(1);
    CommonIo dmeasure_io;
    std::string dmeasure_eval;
    std::size_t dmeasure_n = 10;
    auto* cmd_dmeasure =
        cmd_decontam->add_subcommand("measure", "token-overlap contamination fractions");
    add_io(cmd_dmeasure, dmeasure_io, false);
    cmd_dmeasure->add_option("--eval", dmeasure_eval, "eval set JSONL")->required();
    cmd_dmeasure->add_option("--ngram", dmeasure_n, "overlap gram length");

    CommonIo dflag_io;
    std::string dflag_eval;
    bool dflag_ci = false;
    auto* cmd_dflag =
        cmd_decontam->add_subcommand("flag", "flag docs containing question+option");
    add_io(cmd_dflag, dflag_io, false);
    cmd_dflag->add_option("--eval", dflag_eval, "eval set JSONL")->required();
    cmd_dflag->add_flag("--case-insensitive", dflag_ci, "fold case when matching");

    CommonIo dexcise_io;
    std::string dexcise_eval;
    bool dexcise_ci = false;
    auto* cmd_dexcise =
        cmd_decontam->add_subcommand("excise", "remove matched question/option strings");
    add_io(cmd_dexcise, dexcise_io, true);
    cmd_dexcise->add_option("--eval", dexcise_eval, "eval set JSONL")->required();
    cmd_dexcise->add_flag("--case-insensitive", dexcise_ci, "fold case when matching");

    // mix
    CommonIo mix_io;
    std::string mix_spec;
    auto* cmd_mix = app.add_subcommand("mix", "combine sources by token proportions");
    cmd_mix->add_option("--spec", mix_spec, "mix spec JSON")->required();
    cmd_mix->add_option("--output", mix_io.output, "output corpus path")->required();
    cmd_mix->add_option("--report", mix_io.report_path, "write the mixture report here");
    cmd_mix->add_option("--seed", mix_io.seed, "seed override when the spec file has none");

    // stats
    CommonIo stats_io;
    std::string stats_scores;
    auto* cmd_stats = app.add_subcommand("stats", "corpus statistics / score aggregation");
    cmd_stats->add_option("input,--input", stats_io.input, "input corpus");
    cmd_stats->add_option("--scores", stats_scores,
                          "task scores JSON [{task,accuracy,baseline}]");
    cmd_stats->add_option("--report", stats_io.report_path, "write JSON here instead of stdout");
    cmd_stats->add_option("--seed", stats_io.seed, "seed echoed into the report");

    // pipeline
    CommonIo pipe_io;
    std::string pipe_config;
    std::size_t pipe_shards = 1;
    auto* cmd_pipe = app.add_subcommand("pipeline", "run a declarative pipeline config");
    add_io(cmd_pipe, pipe_io, true);
    cmd_pipe->add_option("--config", pipe_config, "pipeline JSON config")->required();
    cmd_pipe->add_option("--shards", pipe_shards, "round-robin shard count")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // help goes to stdout, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage errors are exit 1
    }

    try {
        if (cmd_extract->parsed())
            return run_extract(extract_io, extract_wet, extract_link_density, extract_min_words);
        if (cmd_filter->parsed())
            return run_filter(filter_io, rules_path, domains_path, substrings_path);
        if (cmd_exact->parsed()) return run_dedup_exact(exact_io, exact_key);
        if (cmd_bloom->parsed()) return run_dedup_bloom(bloom_io, bff_cfg, filter_in, filter_out);
        if (cmd_minhash->parsed()) return run_dedup_minhash(minhash_io, mh_cfg);
        if (cmd_suffix->parsed()) return run_dedup_suffix(suffix_io, min_run);
        if (cmd_quality->parsed()) {
            if (cmd_qtrain->parsed()) {
                q_cfg.use_bigrams = !q_unigrams_only;
                return run_quality_train(q_pos, q_neg, q_model, q_cfg, q_train_report);
            }
            if (cmd_qscore->parsed()) return run_quality_score(qscore_io, qscore_model);
            if (cmd_qfilter->parsed())
                return run_quality_filter_cmd(qfilter_io, qfilter_model, q_keep);
            if (cmd_qprep->parsed())
                return run_quality_prep_qa(qprep_io, prep_post_score, prep_comment_score,
                                           prep_min_comments);
        }
        if (cmd_decontam->parsed()) {
            if (cmd_dmeasure->parsed())
                return run_decontam_measure(dmeasure_io, dmeasure_eval, dmeasure_n);
            if (cmd_dflag->parsed()) return run_decontam_flag(dflag_io, dflag_eval, dflag_ci);
            if (cmd_dexcise->parsed())
                return run_decontam_excise(dexcise_io, dexcise_eval, dexcise_ci);
        }
        if (cmd_mix->parsed()) return run_mix(mix_spec, mix_io);
        if (cmd_stats->parsed()) {
            if (stats_io.input.empty() && stats_scores.empty()) {
                std::cerr << "stats: needs an input corpus or --scores\n";
                return 1;
            }
            return run_stats(stats_io, stats_scores);
        }
        if (cmd_pipe->parsed()) return run_pipeline_cmd(pipe_io, pipe_config, pipe_shards);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    std::cerr << "no subcommand\n";
    return 1;
}
