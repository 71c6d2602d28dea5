// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "podrank/eval.hpp"

using namespace podrank;
using Catch::Approx;

namespace {

RunFile run_of(const std::map<std::string, std::vector<std::string>>& lists) {
    RunFile run;
    for (const auto& [qid, docs] : lists) {
        std::vector<ScoredDoc> scored;
        for (std::size_t i = 0; i < docs.size(); ++i) scored.push_back({docs[i], static_cast<double>(docs.size() - i)});
        append_ranking(run, qid, RankedList::from_unsorted(scored), "t");
    }
    return run;
}

}  // namespace

TEST_CASE("precision_at_k", "[eval]") {
    Judgments j = {{"a", 1}, {"b", 2}, {"c", 0}, {"d", 1}};
    CHECK(precision_at_k({"a", "b"}, j, 2) == 1.0);
    CHECK(precision_at_k({"c", "x"}, j, 2) == 0.0);
    CHECK(precision_at_k({"a", "b", "d", "c", "x", "y", "z", "u", "v", "w"}, j, 10) == Approx(0.3));
    CHECK(precision_at_k({"a"}, j, 10) == Approx(0.1));
    CHECK(precision_at_k({"a", "c", "b"}, j, 3) == precision_at_k({"b", "a", "c"}, j, 3));
    CHECK_THROWS_AS(precision_at_k({"a"}, j, 0), ConfigError);
}

TEST_CASE("ndcg_at_k examples", "[eval]") {
    Judgments j = {{"x", 1}, {"y", 0}, {"z", 2}};
    CHECK(ndcg_at_k({"x", "y", "z"}, j) == Approx(0.688528).margin(1e-6));
    CHECK(ndcg_at_k({"x", "y", "z"}, j) == Approx(2.5 / (3.0 + 1.0 / std::log2(3.0))).epsilon(1e-15));
    CHECK(ndcg_at_k({"z", "x", "y"}, j) == 1.0);
    CHECK(ndcg_at_k({"z", "x"}, j, 1) == 1.0);
    CHECK(ndcg_at_k({"x", "z"}, j, 1) == Approx(1.0 / 3.0));
    CHECK(ndcg_at_k({"a", "b"}, {{"a", 0}}) == 0.0);
    CHECK(ndcg_at_k({}, j) == 0.0);
    // An unjudged document extends the full-list depth but has no gain.
    CHECK(ndcg_at_k({"q", "z", "x"}, j) == Approx((3.0 / std::log2(3.0) + 1.0 / 2.0) / (3.0 + 1.0 / std::log2(3.0))));
}

TEST_CASE("ndcg matches exhaustive evaluation over permutations", "[eval]") {
    std::mt19937_64 rng(89);
    for (std::size_t n = 1; n <= 6; ++n) {
        for (int trial = 0; trial < 4; ++trial) {
            Judgments j;
            std::vector<std::string> docs;
            std::vector<int> grades;
            for (std::size_t i = 0; i < n; ++i) {
                docs.push_back("d" + std::to_string(i));
                j[docs.back()] = static_cast<int>(rng() % 4);
                grades.push_back(j[docs.back()]);
            }
            std::sort(docs.begin(), docs.end());
            double best = 0;
            do {
                std::vector<int> rels;
                for (const auto& d : docs) rels.push_back(j[d]);
                for (std::size_t k : {std::size_t{1}, std::size_t{3}, n}) {
                    CHECK(ndcg_at_k(docs, j, k) == Approx(oracle::ndcg_exhaustive(rels, grades, k)).epsilon(1e-12));
                }
                const double full = ndcg_at_k(docs, j);
                CHECK(full == Approx(oracle::ndcg_exhaustive(rels, grades, n)).epsilon(1e-12));
                CHECK(full >= 0.0);
                CHECK(full <= 1.0 + 1e-12);
                best = std::max(best, full);
            } while (std::next_permutation(docs.begin(), docs.end()));
            // the best permutation is the ideal one
            const bool any_rel = std::any_of(grades.begin(), grades.end(), [](int g) { return g > 0; });
            CHECK(best == Approx(any_rel ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("evaluate", "[eval]") {
    Qrels q;
    q.by_query["1"] = {{"a", 2}, {"b", 1}, {"c", 0}};
    q.by_query["2"] = {{"x", 1}};
    q.by_query["3"] = {{"n", 0}};

    SECTION("ideal run") {
        auto rep = evaluate(run_of({{"1", {"a", "b", "c"}}, {"2", {"x"}}}), q);
        CHECK(rep.queries_in_mean == 2);
        CHECK(rep.mean.ndcg == 1.0);
        CHECK(rep.mean.ndcg20 == 1.0);
        CHECK(rep.mean.ndcg100 == 1.0);
        CHECK(rep.per_query.at("3").ndcg == 0.0);
    }
    SECTION("empty run") {
        auto rep = evaluate(RunFile{}, q);
        CHECK(rep.mean == QueryMetrics{});
        CHECK(rep.queries_in_mean == 2);
    }
    SECTION("two-query means") {
        auto rep = evaluate(run_of({{"1", {"b", "a"}}, {"2", {"y", "x"}}, {"9", {"zz"}}}), q);
        const double n1 = (1.0 + 3.0 / std::log2(3.0)) / (3.0 + 1.0 / std::log2(3.0));
        const double n2 = 1.0 / std::log2(3.0);
        CHECK(rep.per_query.at("1").ndcg == Approx(n1));
        CHECK(rep.per_query.at("2").ndcg == Approx(n2));
        CHECK(rep.mean.ndcg == Approx((n1 + n2) / 2));
        CHECK(rep.mean.p10 == Approx((0.2 + 0.1) / 2));
        CHECK(rep.warnings.size() == 1);

        EvalOptions all;
        all.include_unjudged_queries = true;
        CHECK(evaluate(run_of({{"1", {"b", "a"}}, {"2", {"y", "x"}}}), q, all).queries_in_mean == 3);

        std::ostringstream out;
        write_report(out, rep);
        CHECK(out.str().find("ndcg\tall\t") != std::string::npos);
        CHECK(out.str().find("P_10\t1\t0.200000") != std::string::npos);
    }
}

TEST_CASE("run files", "[eval]") {
    auto run = run_of({{"1", {"a", "b", "c"}}});
    std::stringstream buf;
    write_run(buf, run);
    CHECK(buf.str() == "1 Q0 a 1 3.000000 t\n1 Q0 b 2 2.000000 t\n1 Q0 c 3 1.000000 t\n");
    CHECK(read_run(buf) == run);

    std::istringstream five("1 Q0 a 1 3.0\n");
    try {
        read_run(five);
        FAIL("expected parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }
    std::istringstream inverted("1 Q0 a 2 3.2 t\n1 Q0 b 1 1.1 t\n");
    CHECK_THROWS_AS(read_run(inverted), Error);
    std::istringstream gap("1 Q0 a 1 3 t\n1 Q0 b 3 1 t\n");
    CHECK_THROWS_AS(read_run(gap), Error);
    std::istringstream dup("1 Q0 a 1 3 t\n1 Q0 a 2 1 t\n");
    CHECK_THROWS_AS(read_run(dup), Error);
    std::istringstream bad_score("1 Q0 a 1 nan t\n");
    CHECK_THROWS_AS(read_run(bad_score), ParseError);

    // Scores closer than the printed precision still read back in rank order.
    RunFile close;
    append_ranking(close, "q", RankedList::from_unsorted({{"b", 0.1234561}, {"a", 0.1234559}}), "t");
    CHECK(close.rows[0].doc_id == "a");
    std::stringstream cbuf;
    write_run(cbuf, close);
    CHECK(read_run(cbuf) == close);
}

TEST_CASE("qrels", "[eval]") {
    std::istringstream empty("");
    CHECK(read_qrels(empty).by_query.empty());

    std::istringstream one("q1 0 d1 2\n");
    CHECK(read_qrels(one).by_query.at("q1").at("d1") == 2);

    std::istringstream dup("q1 0 d1 2\nq1 0 d1 0\n");
    auto q = read_qrels(dup);
    CHECK(q.by_query.at("q1").size() == 1);
    CHECK(q.by_query.at("q1").at("d1") == 0);
    CHECK(q.warnings.size() == 1);

    std::istringstream frac("q1 0 d1 1.5\n");
    CHECK_THROWS_AS(read_qrels(frac), ParseError);
    std::istringstream neg("q1 0 d1 -1\n");
    CHECK_THROWS_AS(read_qrels(neg), ParseError);
    std::istringstream three("q1 d1 1\n");
    CHECK_THROWS_AS(read_qrels(three), ParseError);
}
