// SPDX-License-Identifier: Apache-2.0
//
// podrank: command-line driver for the two-stage podcast segment ranker.
// Every stage is a subcommand reading and writing files under --out-dir;
// `pipeline` runs them all in one process.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "podrank/podrank.hpp"

namespace {

using namespace podrank;

enum ExitCode { kOk = 0, kUsage = 1, kData = 2 };

/// Settings flags shared by every subcommand: one string option per
/// configuration key (`fb_docs` -> `--fb-docs`), plus --config.
struct SettingFlags {
    std::string config_file;
    std::map<std::string, std::string> values;

    void attach(CLI::App& app) {
        app.add_option("--config", config_file, "key = value configuration file");
        for (const auto& key : config_keys()) {
            std::string flag = "--" + key;
            for (auto& c : flag) {
                if (c == '_') c = '-';
            }
            app.add_option(flag, values[key]);
        }
    }

    PipelineConfig resolve(const CLI::App& app) const {
        std::vector<std::pair<std::string, std::string>> overrides;
        for (const auto& key : config_keys()) {
            std::string flag = "--" + key;
            for (auto& c : flag) {
                if (c == '_') c = '-';
            }
            if (app.get_option(flag)->count() > 0) overrides.emplace_back(key, values.at(key));
        }
        std::string text = config_file.empty() ? std::string{} : read_text_file(config_file);
        return parse_config(text, overrides);
    }
};

std::string or_default(const std::string& given, const std::string& fallback) {
    return given.empty() ? fallback : given;
}

void require(const std::string& value, const char* key) {
    if (value.empty()) throw ConfigError(key, "is required");
}

void print_report(const MetricReport& report) {
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    std::printf("queries %zu  P@10 %.4f  P@20 %.4f  nDCG@20 %.4f  nDCG@100 %.4f  nDCG %.4f\n",
                report.queries_in_mean, report.mean.p10, report.mean.p20, report.mean.ndcg20, report.mean.ndcg100,
                report.mean.ndcg);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage podcast segment ranking: BM25+RM3 shortlist, neural re-rank, score fusion"};
    app.require_subcommand(1);

    struct Command {
        CLI::App* app;
        SettingFlags flags;
    };
    std::map<std::string, Command> commands;
    auto add = [&](const std::string& name, const std::string& help) -> Command& {
        auto& cmd = commands[name];
        cmd.app = app.add_subcommand(name, help);
        cmd.flags.attach(*cmd.app);
        return cmd;
    };

    std::string index_path, run_path, segments_path, neural_run, lexical_run, pairs_path, validation_path;
    std::size_t synthetic = 0;

    add("index", "build the episode index (episodes.pidx)");
    auto& segment = add("segment", "split episodes into windows (segments.jsonl)");
    segment.app->add_option("--run", run_path, "only segment episodes shortlisted in this run");
    auto& search = add("search", "BM25+RM3 first stage (first_stage.run)");
    search.app->add_option("--index", index_path, "index file [out-dir/episodes.pidx]");
    auto& embed = add("embed", "write hash-baseline embeddings for the rerank inputs (embeddings.emb)");
    embed.app->add_option("--run", run_path, "first-stage run [out-dir/first_stage.run]");
    embed.app->add_option("--segments", segments_path, "segments [out-dir/segments.jsonl]");
    auto& train = add("train-head", "train a scoring head (head.txt)");
    train.app->add_option("--pairs", pairs_path, "labeled pairs, one JSON object per line");
    train.app->add_option("--validation", validation_path, "labeled pairs used for early stopping");
    train.app->add_option("--synthetic", synthetic, "train on N generated separable pairs instead");
    auto& rerank = add("rerank", "neural re-ranking of candidate segments (rerank.run)");
    rerank.app->add_option("--run", run_path, "first-stage run [out-dir/first_stage.run]");
    rerank.app->add_option("--segments", segments_path, "segments [out-dir/segments.jsonl]");
    auto& fuse = add("fuse", "combine neural and lexical scores (final.run)");
    fuse.app->add_option("--neural-run", neural_run, "re-ranked run [out-dir/rerank.run]");
    fuse.app->add_option("--lexical-run", lexical_run, "first-stage run [out-dir/first_stage.run]");
    auto& evaluate_cmd = add("evaluate", "P@k and nDCG of a run against qrels (metrics.txt)");
    evaluate_cmd.app->add_option("--run", run_path, "run to evaluate [out-dir/final.run]");
    add("pipeline", "run every stage end to end");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    std::string name;
    for (auto& [n, cmd] : commands) {
        if (cmd.app->parsed()) name = n;
    }
    auto& cmd = commands.at(name);

    try {
        PipelineConfig cfg = cmd.flags.resolve(*cmd.app);
        OutputPaths out{cfg.out_dir};
        std::filesystem::create_directories(out.dir);
        const auto tokenizer = load_tokenizer(cfg.stopwords);

        if (name == "index") {
            require(cfg.corpus, "corpus");
            auto index = index_corpus(load_corpus(cfg.corpus), tokenizer);
            write_index(out.index(), index);
            std::printf("indexed %zu episodes, %zu terms -> %s\n", index.num_docs(), index.num_terms(),
                        out.index().c_str());
        } else if (name == "segment") {
            require(cfg.corpus, "corpus");
            auto corpus = load_corpus(cfg.corpus);
            auto segs = run_path.empty() ? segment_corpus(corpus, cfg.segmentation)
                                         : segment_shortlist(corpus, read_run_file(run_path), cfg.segmentation);
            save_segments(out.segments(), segs);
            std::printf("%zu segments -> %s\n", segs.size(), out.segments().c_str());
        } else if (name == "search") {
            require(cfg.queries, "queries");
            auto index = read_index(or_default(index_path, out.index()));
            auto run = first_stage(index, load_queries(cfg.queries), cfg);
            write_run_file(out.first_stage(), run);
            std::printf("%zu rows -> %s\n", run.rows.size(), out.first_stage().c_str());
        } else if (name == "embed") {
            require(cfg.queries, "queries");
            if (cfg.provider != "hash") throw ConfigError("provider", "embed writes the hash baseline only");
            auto segs = load_segments(or_default(segments_path, out.segments()));
            auto first = read_run_file(or_default(run_path, out.first_stage()));
            SegmentTable table(segs, tokenizer);
            HashProvider provider(cfg.embedding, tokenizer);
            register_hash_inputs(provider, first, load_queries(cfg.queries), table, cfg, tokenizer);
            auto file = provider.export_all();
            write_embedding_file(out.embeddings(), file);
            std::printf("%zu records -> %s\n", file.records.size(), out.embeddings().c_str());
        } else if (name == "train-head") {
            std::vector<LabeledPair> pairs, validation;
            if (synthetic > 0) {
                pairs = synthetic_pairs(synthetic, cfg.embedding, cfg.seed);
            } else {
                require(pairs_path, "pairs");
                pairs = load_training_pairs(pairs_path, cfg, tokenizer);
            }
            if (!validation_path.empty()) validation = load_training_pairs(validation_path, cfg, tokenizer);
            const std::size_t dim = pairs.empty() ? cfg.embedding.dim : (cfg.variant == ScorerVariant::sim
                                                                              ? pairs.front().query.dim
                                                                              : pairs.front().joint.dim);
            HeadParams head = default_head(cfg.variant, dim);
            std::vector<double> history;
            double acc = 0.0;
            if (cfg.variant == ScorerVariant::sim) {
                auto res = train_sim_head(pairs, head.bank, ScoringHead::zeros(head.bank.size()), cfg.train, validation);
                head.sim = res.model.head;
                history = res.loss_history;
                acc = accuracy(res.model, featurize_all(res.model, pairs));
            } else {
                auto res = train_regression_head(pairs, head.reg, cfg.train, validation);
                head.reg = res.model.head;
                history = res.loss_history;
                acc = accuracy(res.model, featurize_all(res.model, pairs));
            }
            write_head(out.head(), head);
            for (std::size_t e = 0; e < history.size(); ++e) std::printf("epoch %zu loss %.6f\n", e, history[e]);
            std::printf("training accuracy %.4f -> %s\n", acc, out.head().c_str());
        } else if (name == "rerank") {
            require(cfg.queries, "queries");
            auto first = read_run_file(or_default(run_path, out.first_stage()));
            auto segs = load_segments(or_default(segments_path, out.segments()));
            auto run = rerank_stage(first, segs, load_queries(cfg.queries), cfg, tokenizer);
            write_run_file(out.rerank(), run);
            std::printf("%zu rows -> %s\n", run.rows.size(), out.rerank().c_str());
        } else if (name == "fuse") {
            auto run = fuse_stage(read_run_file(or_default(neural_run, out.rerank())),
                                  read_run_file(or_default(lexical_run, out.first_stage())), cfg.fusion);
            write_run_file(out.final_run(), run);
            std::printf("%zu rows -> %s\n", run.rows.size(), out.final_run().c_str());
        } else if (name == "evaluate") {
            require(cfg.qrels, "qrels");
            auto qrels = read_qrels_file(cfg.qrels);
            for (const auto& w : qrels.warnings) std::cerr << "warning: " << w << '\n';
            auto report = evaluate(read_run_file(or_default(run_path, out.final_run())), qrels);
            save_report(out.metrics(), report);
            print_report(report);
        } else if (name == "pipeline") {
            require(cfg.corpus, "corpus");
            require(cfg.queries, "queries");
            auto result = run_pipeline(cfg);
            std::printf("%zu rows -> %s\n", result.final_run.rows.size(), out.final_run().c_str());
            if (result.report) print_report(*result.report);
        }
    } catch (const ConfigError& e) {
        std::cerr << "podrank " << name << ": " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "podrank " << name << ": " << e.what() << '\n';
        return kData;
    }
    return kOk;
}
