// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sys/wait.h>

#include "podrank/pipeline.hpp"

using namespace podrank;
namespace fs = std::filesystem;

namespace {

const std::string kData = PODRANK_DATA_DIR;

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("podrank_pipe_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

PipelineConfig toy_config(const fs::path& out, std::vector<std::pair<std::string, std::string>> extra = {}) {
    std::vector<std::pair<std::string, std::string>> kv = {{"corpus", kData + "/corpus.jsonl"},
                                                           {"queries", kData + "/queries.jsonl"},
                                                           {"qrels", kData + "/qrels.txt"},
                                                           {"out_dir", out.string()}};
    kv.insert(kv.end(), extra.begin(), extra.end());
    return parse_config("", kv);
}

std::string slurp(const fs::path& p) { return read_text_file(p.string()); }

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PODRANK_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("parse_config", "[pipeline]") {
    auto cfg = parse_config("");
    CHECK(cfg.first_stage_k == 1000);
    CHECK(cfg.segment_k == 1000);
    CHECK(cfg.variant == ScorerVariant::sim);
    CHECK(cfg.provider == "hash");
    CHECK(cfg.seed == 42);
    CHECK(cfg.bm25.k1 == 1.2);
    CHECK(cfg.bm25.b == 0.75);
    CHECK(cfg.rm3_params.fb_docs == 10);
    CHECK(cfg.rm3_params.fb_terms == 10);
    CHECK(cfg.rm3_params.rm3_alpha == 0.5);
    CHECK(cfg.rm3_params.dirichlet_mu == 2500.0);
    CHECK(cfg.segmentation.window_s == 120.0);
    CHECK(cfg.segmentation.stride_s == 60.0);
    CHECK(cfg.fusion.fusion_alpha == 1.0);
    CHECK(cfg.train.learning_rate == 1e-3);
    CHECK(cfg.train.patience == 2);

    auto file = parse_config("# comment\nk1 = 0.9\nvariant = reg-concat\nseed = 7\n\n", {{"k1", "1.5"}});
    CHECK(file.bm25.k1 == 1.5);
    CHECK(file.variant == ScorerVariant::reg_concat);
    CHECK(file.train.seed == 7);
    CHECK(file.embedding.seed == 7);

    auto key_of = [](const std::string& text) -> std::string {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.key();
        }
        return "";
    };
    CHECK(key_of("k1 = fast") == "k1");
    CHECK(key_of("nonsense = 1") == "nonsense");
    CHECK(key_of("fb_docs = 2.5") == "fb_docs");
    CHECK(key_of("first_stage_k = 0") == "first_stage_k");
    CHECK(key_of("variant = big") == "variant");
    CHECK(key_of("rm3 = maybe") == "rm3");
    CHECK_THROWS_AS(parse_config("no equals sign"), ConfigError);

    for (const auto& key : config_keys()) CHECK(key.find('-') == std::string::npos);
}

TEST_CASE("pipeline is deterministic and writes every artifact", "[pipeline]") {
    auto a = scratch("det_a"), b = scratch("det_b");
    auto ra = run_pipeline(toy_config(a));
    auto rb = run_pipeline(toy_config(b));
    for (const char* f : {"episodes.pidx", "first_stage.run", "segments.jsonl", "rerank.run", "final.run", "metrics.txt"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(ra.final_run == rb.final_run);
    REQUIRE(ra.report);
    CHECK(ra.report->queries_in_mean == 5);
    CHECK(ra.report->mean.ndcg > 0.0);

    for (const auto& qid : ra.final_run.qids()) {
        auto rows = ra.final_run.for_query(qid);
        CHECK(rows.size() <= 1000);
        for (const auto& r : rows) {
            CHECK(r.score >= 0.0);
            CHECK(r.score <= 1.0);
            CHECK(r.tag == "sim-fused");
        }
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("pipeline cutoffs and tie rule", "[pipeline]") {
    auto dir = scratch("cut");
    SECTION("first-stage cutoff 1 keeps one episode per query") {
        auto r = run_pipeline(toy_config(dir, {{"first_stage_k", "1"}}));
        for (const auto& qid : r.final_run.qids()) {
            std::set<std::string> episodes;
            for (const auto& row : r.final_run.for_query(qid)) episodes.insert(segment_episode_id(row.doc_id));
            CHECK(episodes.size() == 1);
            CHECK(r.first_stage.for_query(qid).size() == 1);
        }
    }
    SECTION("segment cutoff") {
        auto r = run_pipeline(toy_config(dir, {{"segment_k", "7"}}));
        for (const auto& qid : r.final_run.qids()) CHECK(r.final_run.for_query(qid).size() == 7);
    }
    SECTION("constant scorer without fusion orders by id") {
        auto r = run_pipeline(toy_config(dir, {{"variant", "reg"}, {"fusion_alpha", "0"}}));
        for (const auto& qid : r.final_run.qids()) {
            auto rows = r.final_run.for_query(qid);
            REQUIRE(!rows.empty());
            for (std::size_t i = 1; i < rows.size(); ++i) {
                CHECK(rows[i - 1].doc_id < rows[i].doc_id);
                CHECK(rows[i].score == 0.5);
            }
        }
    }
    SECTION("rm3 off uses the plain query") {
        auto r = run_pipeline(toy_config(dir, {{"rm3", "false"}}));
        CHECK(!r.first_stage.rows.empty());
    }
    fs::remove_all(dir);
}

TEST_CASE("pipeline errors name the stage", "[pipeline]") {
    auto dir = scratch("err");
    auto cfg = toy_config(dir);
    cfg.corpus = (dir / "missing.jsonl").string();
    try {
        run_pipeline(cfg);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("[index]", 0) == 0);
    }

    cfg = toy_config(dir, {{"provider", "file:" + (dir / "none.emb").string()}});
    try {
        run_pipeline(cfg);
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).rfind("[rerank]", 0) == 0);
    }

    HeadParams reg = default_head(ScorerVariant::reg, 64);
    write_head((dir / "head.txt").string(), reg);
    cfg = toy_config(dir, {{"head", (dir / "head.txt").string()}});
    CHECK_THROWS_AS(run_pipeline(cfg), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("segment candidates inherit episode scores", "[pipeline]") {
    std::vector<Segment> segs = {{"e1_0", "e1", 0, "a b"}, {"e1_60", "e1", 60, ""}, {"e2_0", "e2", 0, "c"}};
    SegmentTable table(segs, Tokenizer{});
    auto eps = RankedList::from_unsorted({{"e1", 2.0}, {"e2", 3.0}, {"e3", 1.0}});
    auto c = segment_candidates(eps, table, 10);
    REQUIRE(c.size() == 2);  // empty segment and segment-less episode drop out
    CHECK(c[0] == ScoredDoc{"e2_0", 3.0});
    CHECK(c[1] == ScoredDoc{"e1_0", 2.0});
    CHECK(segment_candidates(eps, table, 1).size() == 1);
}

TEST_CASE("cli exit codes", "[pipeline]") {
    auto dir = scratch("cli");
    const std::string out = " --out-dir " + dir.string();
    const std::string data = " --corpus " + kData + "/corpus.jsonl --queries " + kData + "/queries.jsonl";
    CHECK(run_cli("") == 1);
    CHECK(run_cli("frobnicate") == 1);
    CHECK(run_cli("index --no-such-flag" + out) == 1);
    CHECK(run_cli("pipeline --k1 fast" + data + out) == 1);
    CHECK(run_cli("index" + out) == 1);  // corpus is required
    CHECK(run_cli("index --corpus " + (dir / "absent.jsonl").string() + out) == 2);
    {
        std::ofstream bad(dir / "bad.jsonl");
        bad << "{\"episode_id\": 3}\n";
    }
    CHECK(run_cli("index --corpus " + (dir / "bad.jsonl").string() + out) == 2);
    CHECK(run_cli("index --corpus " + kData + "/corpus.jsonl" + out) == 0);
    CHECK(fs::exists(dir / "episodes.pidx"));
    CHECK(run_cli("--help") == 0);
    fs::remove_all(dir);
}
