// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "podrank/corpus.hpp"
#include "podrank/embedding.hpp"
#include "podrank/error.hpp"
#include "podrank/eval.hpp"
#include "podrank/fusion.hpp"
#include "podrank/index.hpp"
#include "podrank/index_io.hpp"
#include "podrank/prf.hpp"
#include "podrank/rerank/head_io.hpp"
#include "podrank/rerank/rerank.hpp"
#include "podrank/rerank/train.hpp"

namespace podrank {

/// Which query text the similarity scorer embeds.
enum class QuerySource { query, description, both };

struct PipelineConfig {
    std::string corpus;
    std::string queries;
    std::string qrels;
    std::string out_dir = ".";
    std::string head;       // head parameter file; empty = built-in prior
    std::string stopwords;  // one word per line; empty = none
    std::string provider = "hash";  // "hash" or "file:<path>"

    std::size_t first_stage_k = 1000;
    std::size_t segment_k = 1000;
    ScorerVariant variant = ScorerVariant::sim;
    QuerySource sim_query = QuerySource::both;
    bool rm3 = true;
    std::uint64_t seed = 42;

    Bm25Params bm25;
    Rm3Params rm3_params;
    SegmentationConfig segmentation;
    FusionParams fusion;
    TrainConfig train;
    HashEmbeddingConfig embedding;

    void validate() const {
        if (first_stage_k < 1) throw ConfigError("first_stage_k", "must be >= 1");
        if (segment_k < 1) throw ConfigError("segment_k", "must be >= 1");
        bm25.validate();
        rm3_params.validate();
        segmentation.validate();
        fusion.validate();
        train.validate();
        if (embedding.dim < 1 || embedding.layers < 1) throw ConfigError("embed_dim", "dim and layers must be >= 1");
        if (provider != "hash" && provider.rfind("file:", 0) != 0) {
            throw ConfigError("provider", "expected 'hash' or 'file:<path>'");
        }
    }
};

// -- configuration ---------------------------------------------------------------

namespace detail {

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T out{};
    const char* first = value.data();
    const char* last = value.data() + value.size();
    std::from_chars_result res;
    if constexpr (std::is_floating_point_v<T>) {
        res = std::from_chars(first, last, out);
    } else {
        if (!value.empty() && value[0] == '-') throw ConfigError(key, "expected a non-negative integer, got '" + value + "'");
        res = std::from_chars(first, last, out);
    }
    if (res.ec != std::errc{} || res.ptr != last || value.empty()) {
        throw ConfigError(key, std::string("expected ") + (std::is_floating_point_v<T> ? "a number" : "an integer") +
                                   ", got '" + value + "'");
    }
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError(key, "expected a boolean, got '" + value + "'");
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, const std::string& value)>;

template <typename T>
Setter number(T PipelineConfig::*field) {
    return [field](PipelineConfig& c, const std::string& k, const std::string& v) { c.*field = parse_number<T>(k, v); };
}

template <typename Sub, typename T>
Setter nested(Sub PipelineConfig::*sub, T Sub::*field) {
    return [sub, field](PipelineConfig& c, const std::string& k, const std::string& v) {
        (c.*sub).*field = parse_number<T>(k, v);
    };
}

inline Setter text(std::string PipelineConfig::*field) {
    return [field](PipelineConfig& c, const std::string&, const std::string& v) { c.*field = v; };
}

inline const std::map<std::string, Setter>& settings() {
    static const std::map<std::string, Setter> table = {
        {"corpus", text(&PipelineConfig::corpus)},
        {"queries", text(&PipelineConfig::queries)},
        {"qrels", text(&PipelineConfig::qrels)},
        {"out_dir", text(&PipelineConfig::out_dir)},
        {"head", text(&PipelineConfig::head)},
        {"stopwords", text(&PipelineConfig::stopwords)},
        {"provider", text(&PipelineConfig::provider)},
        {"first_stage_k", number(&PipelineConfig::first_stage_k)},
        {"segment_k", number(&PipelineConfig::segment_k)},
        {"seed", number(&PipelineConfig::seed)},
        {"variant", [](PipelineConfig& c, const std::string&, const std::string& v) { c.variant = parse_variant(v); }},
        {"sim_query",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             if (v == "query") c.sim_query = QuerySource::query;
             else if (v == "description") c.sim_query = QuerySource::description;
             else if (v == "both") c.sim_query = QuerySource::both;
             else throw ConfigError(k, "expected query, description or both, got '" + v + "'");
         }},
        {"rm3", [](PipelineConfig& c, const std::string& k, const std::string& v) { c.rm3 = parse_bool(k, v); }},
        {"k1", nested(&PipelineConfig::bm25, &Bm25Params::k1)},
        {"b", nested(&PipelineConfig::bm25, &Bm25Params::b)},
        {"fb_docs", nested(&PipelineConfig::rm3_params, &Rm3Params::fb_docs)},
        {"fb_terms", nested(&PipelineConfig::rm3_params, &Rm3Params::fb_terms)},
        {"rm3_alpha", nested(&PipelineConfig::rm3_params, &Rm3Params::rm3_alpha)},
        {"dirichlet_mu", nested(&PipelineConfig::rm3_params, &Rm3Params::dirichlet_mu)},
        {"window_s", nested(&PipelineConfig::segmentation, &SegmentationConfig::window_s)},
        {"stride_s", nested(&PipelineConfig::segmentation, &SegmentationConfig::stride_s)},
        {"words_per_minute", nested(&PipelineConfig::segmentation, &SegmentationConfig::words_per_minute)},
        {"fusion_alpha", nested(&PipelineConfig::fusion, &FusionParams::fusion_alpha)},
        {"embed_dim", nested(&PipelineConfig::embedding, &HashEmbeddingConfig::dim)},
        {"embed_layers", nested(&PipelineConfig::embedding, &HashEmbeddingConfig::layers)},
        {"loss",
         [](PipelineConfig& c, const std::string& k, const std::string& v) {
             if (v == "ce" || v == "cross-entropy") c.train.loss = LossKind::cross_entropy;
             else if (v == "hinge") c.train.loss = LossKind::hinge;
             else throw ConfigError(k, "expected ce or hinge, got '" + v + "'");
         }},
        {"learning_rate", nested(&PipelineConfig::train, &TrainConfig::learning_rate)},
        {"weight_decay", nested(&PipelineConfig::train, &TrainConfig::weight_decay)},
        {"max_epochs", nested(&PipelineConfig::train, &TrainConfig::max_epochs)},
        {"patience", nested(&PipelineConfig::train, &TrainConfig::patience)},
        {"batch_size", nested(&PipelineConfig::train, &TrainConfig::batch_size)},
        {"max_steps", nested(&PipelineConfig::train, &TrainConfig::max_steps)},
    };
    return table;
}

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

/// Every recognized configuration key.
inline std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const auto& [k, _] : detail::settings()) keys.push_back(k);
    return keys;
}

inline void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = detail::settings();
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown configuration key");
    it->second(cfg, key, value);
}

/// Parses `key = value` lines ('#' starts a comment) into (key, value) pairs.
inline std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected 'key = value'");
        out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    return out;
}

/// Defaults, then the config file's values, then flag overrides. The
/// shared seed feeds both the hash embeddings and training order.
inline PipelineConfig parse_config(const std::string& file_text,
                                   const std::vector<std::pair<std::string, std::string>>& overrides = {}) {
    PipelineConfig cfg;
    for (const auto& [k, v] : parse_config_text(file_text)) apply_setting(cfg, k, v);
    for (const auto& [k, v] : overrides) apply_setting(cfg, k, v);
    cfg.embedding.seed = cfg.seed;
    cfg.train.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

// -- stages ------------------------------------------------------------------------

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus '" + path + "'");
    return parse_corpus(in);
}

inline std::vector<Query> load_queries(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open queries '" + path + "'");
    return parse_queries(in);
}

inline std::vector<Segment> load_segments(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open segments '" + path + "'");
    return read_segments(in);
}

inline void save_segments(const std::string& path, const std::vector<Segment>& segments) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_segments(out, segments);
}

inline Tokenizer load_tokenizer(const std::string& stopwords_path) {
    if (stopwords_path.empty()) return {};
    std::unordered_set<std::string> words;
    std::istringstream in(read_text_file(stopwords_path));
    for (std::string w; in >> w;) {
        for (auto& t : tokenize(w)) words.insert(t);
    }
    return Tokenizer(std::move(words));
}

/// Episode-level index over title + description + transcript.
inline InvertedIndex index_corpus(const Corpus& corpus, const Tokenizer& tokenizer = {}) {
    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(corpus.size());
    for (const auto& ep : corpus.episodes()) docs.emplace_back(ep.episode_id, episode_document(ep));
    return build_index(docs, tokenizer);
}

inline constexpr const char* kFirstStageTag = "bm25rm3";

/// BM25 over episodes with RM3-expanded short queries, top first_stage_k
/// per query. A query that cannot be expanded is searched as typed.
inline RunFile first_stage(const InvertedIndex& index, const std::vector<Query>& queries, const PipelineConfig& cfg) {
    RunFile run;
    const auto tokenizer = index.tokenizer();
    for (const auto& q : queries) {
        auto tokens = tokenizer(q.query);
        WeightedQuery weighted = plain_query(tokens);
        if (cfg.rm3 && !index.empty()) {
            try {
                weighted = expand_query(index, tokens, cfg.rm3_params).terms;
            } catch (const ExpansionUnavailable&) {
            }
        }
        append_ranking(run, q.qid, search(index, weighted, cfg.first_stage_k, cfg.bm25), kFirstStageTag);
    }
    return run;
}

/// Segments of every episode shortlisted for any query.
inline std::vector<Segment> segment_shortlist(const Corpus& corpus, const RunFile& first, const SegmentationConfig& cfg) {
    std::set<std::string> ids;
    for (const auto& r : first.rows) ids.insert(r.doc_id);
    std::vector<const Episode*> eps;
    for (const auto& id : ids) eps.push_back(&corpus.at(id));
    return segment_episodes(eps, cfg);
}

inline std::vector<Segment> segment_corpus(const Corpus& corpus, const SegmentationConfig& cfg) {
    std::vector<const Episode*> eps;
    for (const auto& ep : corpus.episodes()) eps.push_back(&ep);
    return segment_episodes(eps, cfg);
}

/// Segment lookup shared by candidate generation and embedding.
class SegmentTable {
public:
    SegmentTable(const std::vector<Segment>& segments, const Tokenizer& tokenizer) {
        for (const auto& s : segments) {
            by_episode_[s.episode_id].push_back(s.segment_id);
            tokens_.emplace(s.segment_id, tokenizer(s.text));
        }
    }

    const std::vector<std::string>& of_episode(const std::string& episode_id) const {
        static const std::vector<std::string> none;
        auto it = by_episode_.find(episode_id);
        return it == by_episode_.end() ? none : it->second;
    }

    const std::vector<std::string>& tokens(const std::string& segment_id) const {
        auto it = tokens_.find(segment_id);
        if (it == tokens_.end()) throw NotFoundError(segment_id);
        return it->second;
    }

private:
    std::map<std::string, std::vector<std::string>> by_episode_;
    std::map<std::string, std::vector<std::string>> tokens_;
};

/// Segments of the shortlisted episodes, each carrying its episode's lexical
/// score, ordered by (score desc, id asc) and cut to segment_k. Segments
/// without any tokens cannot be scored and are skipped.
inline RankedList segment_candidates(const RankedList& episodes, const SegmentTable& table, std::size_t segment_k) {
    std::vector<ScoredDoc> docs;
    for (const auto& e : episodes) {
        for (const auto& sid : table.of_episode(e.doc_id)) {
            if (!table.tokens(sid).empty()) docs.push_back({sid, e.score});
        }
    }
    auto list = RankedList::from_unsorted(std::move(docs));
    list.truncate(segment_k);
    return list;
}

inline std::vector<std::string> sim_query_tokens(const Query& q, QuerySource source, const Tokenizer& tokenizer) {
    switch (source) {
        case QuerySource::query: return tokenizer(q.query);
        case QuerySource::description: return tokenizer(q.description);
        case QuerySource::both: break;
    }
    auto tokens = tokenizer(q.query);
    auto more = tokenizer(q.description);
    tokens.insert(tokens.end(), more.begin(), more.end());
    return tokens;
}

/// Registers in `provider` every key the reranker will ask for: the query
/// text for similarity heads, each candidate segment, and the joint
/// sequence of each (query, candidate) pair for regression heads.
inline void register_hash_inputs(HashProvider& provider, const RunFile& first, const std::vector<Query>& queries,
                                 const SegmentTable& table, const PipelineConfig& cfg, const Tokenizer& tokenizer) {
    const bool joint = cfg.variant != ScorerVariant::sim;
    for (const auto& q : queries) {
        auto candidates = segment_candidates(first.ranking(q.qid), table, cfg.segment_k);
        if (!joint) provider.add_tokens(q.qid, sim_query_tokens(q, cfg.sim_query, tokenizer));
        auto qt = tokenizer(q.query);
        auto dt = tokenizer(q.description);
        for (const auto& c : candidates) {
            if (joint) {
                provider.add_tokens(joint_key(q.qid, c.doc_id), joint_tokens(qt, dt, table.tokens(c.doc_id)));
            } else {
                provider.add_tokens(c.doc_id, table.tokens(c.doc_id));
            }
        }
    }
}

/// Built-in head used when no trained head is supplied. The similarity
/// prior weights each kernel's length-normalized soft-match count by its
/// centre mu; the regression prior is all zeros (a constant score).
inline HeadParams default_head(ScorerVariant variant, std::size_t dim) {
    HeadParams p;
    p.variant = variant;
    p.bank = KernelBank::standard();
    p.sim = ScoringHead::zeros(p.bank.size());
    p.sim.w2 = p.bank.mus;
    p.reg = RegressionHead::zeros(regression_variant(variant), dim);
    return p;
}

inline HeadParams resolve_head(const PipelineConfig& cfg, std::size_t dim) {
    if (cfg.head.empty()) return default_head(cfg.variant, dim);
    auto p = read_head(cfg.head);
    if (p.variant != cfg.variant) {
        throw ConfigError("variant", std::string("head file holds a '") + variant_name(p.variant) +
                                         "' head but variant is '" + variant_name(cfg.variant) + "'");
    }
    return p;
}

/// Neural re-ranking of each query's candidate segments.
inline RunFile rerank_stage(const RunFile& first, const std::vector<Segment>& segments,
                            const std::vector<Query>& queries, const PipelineConfig& cfg,
                            const Tokenizer& tokenizer = {}) {
    SegmentTable table(segments, tokenizer);
    std::unique_ptr<EmbeddingProvider> provider;
    if (cfg.provider == "hash") {
        auto hash = std::make_unique<HashProvider>(cfg.embedding, tokenizer);
        register_hash_inputs(*hash, first, queries, table, cfg, tokenizer);
        provider = std::move(hash);
    } else {
        provider = std::make_unique<FileProvider>(FileProvider::open(cfg.provider.substr(5)));
    }
    const auto head = resolve_head(cfg, provider->dim());
    RunFile run;
    for (const auto& q : queries) {
        auto candidates = segment_candidates(first.ranking(q.qid), table, cfg.segment_k);
        if (candidates.empty()) continue;
        auto scorer = make_scorer(head, *provider, q.qid, q.qid);
        append_ranking(run, q.qid, rerank_segments(candidates, *scorer, cfg.segment_k), variant_name(cfg.variant));
    }
    return run;
}

/// Fuses neural segment scores with the lexical score of each segment's
/// episode, per query.
inline RunFile fuse_stage(const RunFile& neural, const RunFile& lexical, const FusionParams& params) {
    RunFile run;
    for (const auto& qid : neural.qids()) {
        auto rows = neural.for_query(qid);
        auto episodes = lexical.ranking(qid);
        std::map<std::string, double> episode_score;
        for (const auto& e : episodes) episode_score.emplace(e.doc_id, e.score);
        std::vector<ScoredDoc> lex;
        for (const auto& r : rows) {
            auto it = episode_score.find(segment_episode_id(r.doc_id));
            if (it == episode_score.end()) {
                throw Error("segment '" + r.doc_id + "' of query '" + qid + "' has no first-stage score");
            }
            lex.push_back({r.doc_id, it->second});
        }
        auto fused = fuse_ranked(neural.ranking(qid), RankedList::from_unsorted(std::move(lex)), params);
        append_ranking(run, qid, fused, rows.front().tag + "-fused");
    }
    return run;
}

/// Reads labeled training pairs, one JSON object per line with `label`
/// (0 or 1). With the hash provider the texts `query`, `description` and
/// `text` are embedded directly; with a file provider the records named by
/// `query_key`, `doc_key` (similarity heads) or `joint_key` (regression
/// heads) are used.
inline std::vector<LabeledPair> load_training_pairs(const std::string& path, const PipelineConfig& cfg,
                                                    const Tokenizer& tokenizer = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open pairs '" + path + "'");
    std::unique_ptr<FileProvider> file;
    if (cfg.provider != "hash") file = std::make_unique<FileProvider>(FileProvider::open(cfg.provider.substr(5)));
    const bool joint = cfg.variant != ScorerVariant::sim;
    const auto& emb = cfg.embedding;

    std::vector<LabeledPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::blank(line)) continue;
        auto j = detail::parse_json_line(line, lineno);
        auto label = j.find("label");
        if (label == j.end() || !label->is_number_integer() || (label->get<int>() != 0 && label->get<int>() != 1)) {
            throw ParseError("'label' must be 0 or 1", lineno);
        }
        LabeledPair p;
        p.label = label->get<int>();
        if (file) {
            auto key = [&](const char* name) {
                auto k = detail::string_field(j, name, lineno, true);
                return file->lookup(k);
            };
            if (joint) {
                p.joint = key("joint_key");
            } else {
                p.query = key("query_key");
                p.doc = key("doc_key");
            }
        } else {
            Query q{"", detail::string_field(j, "query", lineno, true), detail::string_field(j, "description", lineno, false)};
            auto text = tokenizer(detail::string_field(j, "text", lineno, true));
            if (joint) {
                p.joint = hash_embed(joint_tokens(tokenizer(q.query), tokenizer(q.description), text), emb.dim,
                                     emb.layers, emb.seed);
            } else {
                p.query = hash_embed(sim_query_tokens(q, cfg.sim_query, tokenizer), emb.dim, emb.layers, emb.seed);
                p.doc = hash_embed(text, emb.dim, emb.layers, emb.seed);
            }
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

/// Standard artifact names under the output directory.
struct OutputPaths {
    std::filesystem::path dir;

    std::string index() const { return (dir / "episodes.pidx").string(); }
    std::string first_stage() const { return (dir / "first_stage.run").string(); }
    std::string segments() const { return (dir / "segments.jsonl").string(); }
    std::string embeddings() const { return (dir / "embeddings.emb").string(); }
    std::string head() const { return (dir / "head.txt").string(); }
    std::string rerank() const { return (dir / "rerank.run").string(); }
    std::string final_run() const { return (dir / "final.run").string(); }
    std::string metrics() const { return (dir / "metrics.txt").string(); }
};

inline void save_report(const std::string& path, const MetricReport& report) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_report(out, report);
}

struct PipelineResult {
    RunFile first_stage;
    std::vector<Segment> segments;
    RunFile rerank;
    RunFile final_run;
    std::optional<MetricReport> report;
};

/// Runs every stage and writes its artifact under cfg.out_dir. Errors are
/// re-thrown tagged with the failing stage.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
    cfg.validate();
    std::string stage;
    auto tagged = [&stage](auto&& fn) {
        try {
            return fn();
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw Error("[" + stage + "] " + e.what());
        }
    };
    OutputPaths out{cfg.out_dir};
    std::filesystem::create_directories(out.dir);
    PipelineResult result;

    stage = "index";
    auto tokenizer = tagged([&] { return load_tokenizer(cfg.stopwords); });
    auto corpus = tagged([&] { return load_corpus(cfg.corpus); });
    auto index = tagged([&] {
        auto idx = index_corpus(corpus, tokenizer);
        write_index(out.index(), idx);
        return idx;
    });

    stage = "search";
    result.first_stage = tagged([&] {
        auto queries = load_queries(cfg.queries);
        auto run = first_stage(index, queries, cfg);
        write_run_file(out.first_stage(), run);
        return run;
    });

    stage = "segment";
    result.segments = tagged([&] {
        auto segs = segment_shortlist(corpus, result.first_stage, cfg.segmentation);
        save_segments(out.segments(), segs);
        return segs;
    });

    stage = "rerank";
    result.rerank = tagged([&] {
        auto run = rerank_stage(result.first_stage, result.segments, load_queries(cfg.queries), cfg, tokenizer);
        write_run_file(out.rerank(), run);
        return run;
    });

    stage = "fuse";
    result.final_run = tagged([&] {
        auto run = fuse_stage(result.rerank, result.first_stage, cfg.fusion);
        write_run_file(out.final_run(), run);
        return run;
    });

    if (!cfg.qrels.empty()) {
        stage = "evaluate";
        result.report = tagged([&] {
            auto report = evaluate(result.final_run, read_qrels_file(cfg.qrels));
            save_report(out.metrics(), report);
            return report;
        });
    }
    return result;
}

}  // namespace podrank
