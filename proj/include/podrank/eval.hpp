// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "podrank/error.hpp"
#include "podrank/ranked_list.hpp"

namespace podrank {

// -- run files ---------------------------------------------------------------

struct RunRow {
    std::string qid;
    std::string doc_id;
    std::size_t rank = 0;
    double score = 0.0;
    std::string tag;

    bool operator==(const RunRow&) const = default;
};

struct RunFile {
    std::vector<RunRow> rows;

    bool operator==(const RunFile&) const = default;

    /// Query ids in order of first appearance.
    std::vector<std::string> qids() const {
        std::vector<std::string> out;
        std::set<std::string> seen;
        for (const auto& r : rows) {
            if (seen.insert(r.qid).second) out.push_back(r.qid);
        }
        return out;
    }

    /// Rows of one query in rank order.
    std::vector<RunRow> for_query(const std::string& qid) const {
        std::vector<RunRow> out;
        for (const auto& r : rows) {
            if (r.qid == qid) out.push_back(r);
        }
        std::sort(out.begin(), out.end(), [](const RunRow& a, const RunRow& b) { return a.rank < b.rank; });
        return out;
    }

    RankedList ranking(const std::string& qid) const {
        std::vector<ScoredDoc> docs;
        for (const auto& r : for_query(qid)) docs.push_back({r.doc_id, r.score});
        return RankedList::from_unsorted(std::move(docs));
    }
};

/// Score as it reads back from a run file (6 decimal places).
inline double quantize_score(double score) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", score);
    return std::strtod(buf, nullptr);
}

/// Appends one query's ranking. Scores are quantized to their on-disk value
/// first and the list re-sorted, so the rows satisfy the ranking order
/// exactly as written.
inline void append_ranking(RunFile& run, const std::string& qid, const RankedList& list, const std::string& tag) {
    std::vector<ScoredDoc> docs;
    docs.reserve(list.size());
    for (const auto& e : list) docs.push_back({e.doc_id, quantize_score(e.score)});
    auto sorted = RankedList::from_unsorted(std::move(docs));
    std::size_t rank = 0;
    for (const auto& e : sorted) run.rows.push_back({qid, e.doc_id, ++rank, e.score, tag});
}

/// Checks contiguous ranks, non-increasing scores and unique (qid, doc).
inline void validate_run(const RunFile& run) {
    std::map<std::string, std::vector<const RunRow*>> by_qid;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& r : run.rows) {
        if (!seen.emplace(r.qid, r.doc_id).second) throw Error("run repeats (" + r.qid + ", " + r.doc_id + ")");
        by_qid[r.qid].push_back(&r);
    }
    for (auto& [qid, rows] : by_qid) {
        std::sort(rows.begin(), rows.end(), [](const RunRow* a, const RunRow* b) { return a->rank < b->rank; });
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i]->rank != i + 1) throw Error("ranks of query '" + qid + "' are not 1..n");
            if (i > 0 && rows[i]->score > rows[i - 1]->score) {
                throw Error("scores of query '" + qid + "' increase at rank " + std::to_string(i + 1));
            }
        }
    }
}

/// `qid Q0 doc_id rank score tag`, scores with six decimals.
inline void write_run(std::ostream& out, const RunFile& run) {
    validate_run(run);
    char buf[64];
    for (const auto& r : run.rows) {
        std::snprintf(buf, sizeof buf, "%.6f", r.score);
        out << r.qid << " Q0 " << r.doc_id << ' ' << r.rank << ' ' << buf << ' ' << r.tag << '\n';
    }
}

inline RunFile read_run(std::istream& in) {
    RunFile run;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::vector<std::string> cols;
        for (std::string c; fields >> c;) cols.push_back(c);
        if (cols.empty()) continue;
        if (cols.size() != 6) {
            throw ParseError("expected 6 columns, found " + std::to_string(cols.size()), lineno);
        }
        RunRow row;
        row.qid = cols[0];
        row.doc_id = cols[2];
        row.tag = cols[5];
        try {
            std::size_t used = 0;
            auto rank = std::stoll(cols[3], &used);
            if (used != cols[3].size() || rank < 1) throw std::invalid_argument("rank");
            row.rank = static_cast<std::size_t>(rank);
            row.score = std::stod(cols[4], &used);
            if (used != cols[4].size() || !std::isfinite(row.score)) throw std::invalid_argument("score");
        } catch (const std::exception&) {
            throw ParseError("bad rank or score", lineno);
        }
        run.rows.push_back(std::move(row));
    }
    validate_run(run);
    return run;
}

inline void write_run_file(const std::string& path, const RunFile& run) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_run(out, run);
}

inline RunFile read_run_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_run(in);
}

// -- qrels -------------------------------------------------------------------

using Judgments = std::map<std::string, int>;  // doc_id -> graded relevance

struct Qrels {
    std::map<std::string, Judgments> by_query;
    std::vector<std::string> warnings;

    const Judgments& for_query(const std::string& qid) const {
        static const Judgments none;
        auto it = by_query.find(qid);
        return it == by_query.end() ? none : it->second;
    }
};

/// Four columns `qid iter doc_id rel`; the iteration column is ignored.
inline Qrels read_qrels(std::istream& in) {
    Qrels q;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream fields(line);
        std::vector<std::string> cols;
        for (std::string c; fields >> c;) cols.push_back(c);
        if (cols.empty()) continue;
        if (cols.size() != 4) throw ParseError("expected 4 columns, found " + std::to_string(cols.size()), lineno);
        int rel = 0;
        try {
            std::size_t used = 0;
            rel = std::stoi(cols[3], &used);
            if (used != cols[3].size()) throw std::invalid_argument("rel");
        } catch (const std::exception&) {
            throw ParseError("non-integer relevance '" + cols[3] + "'", lineno);
        }
        if (rel < 0) throw ParseError("negative relevance", lineno);
        auto [it, inserted] = q.by_query[cols[0]].insert_or_assign(cols[2], rel);
        if (!inserted) {
            q.warnings.push_back("line " + std::to_string(lineno) + ": duplicate judgment for (" + cols[0] + ", " +
                                 cols[2] + "), keeping the last");
        }
    }
    return q;
}

inline Qrels read_qrels_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_qrels(in);
}

// -- metrics -----------------------------------------------------------------

inline int relevance_of(const Judgments& j, const std::string& doc) {
    auto it = j.find(doc);
    return it == j.end() ? 0 : it->second;
}

/// Fraction of the top k that is relevant; short lists count as padded
/// with irrelevant documents.
inline double precision_at_k(const std::vector<std::string>& ranked, const Judgments& judgments, std::size_t k) {
    if (k == 0) throw ConfigError("k", "must be >= 1");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) hits += relevance_of(judgments, ranked[i]) >= 1;
    return static_cast<double>(hits) / static_cast<double>(k);
}

/// nDCG with gain 2^rel - 1 and discount log2(rank + 1). Without k, the
/// cutoff is the size of judged pool and retrieved list combined.
inline double ndcg_at_k(const std::vector<std::string>& ranked, const Judgments& judgments,
                        std::optional<std::size_t> k = std::nullopt) {
    std::size_t depth;
    if (k) {
        if (*k == 0) throw ConfigError("k", "must be >= 1");
        depth = *k;
    } else {
        std::set<std::string> pool(ranked.begin(), ranked.end());
        for (const auto& [doc, _] : judgments) pool.insert(doc);
        depth = pool.size();
    }
    auto gain = [](int rel) { return std::exp2(static_cast<double>(rel)) - 1.0; };
    double dcg = 0.0;
    for (std::size_t r = 0; r < std::min(depth, ranked.size()); ++r) {
        dcg += gain(relevance_of(judgments, ranked[r])) / std::log2(static_cast<double>(r) + 2.0);
    }
    std::vector<int> ideal;
    for (const auto& [_, rel] : judgments) ideal.push_back(rel);
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min(depth, ideal.size()); ++r) {
        idcg += gain(ideal[r]) / std::log2(static_cast<double>(r) + 2.0);
    }
    return idcg > 0.0 ? dcg / idcg : 0.0;
}

struct QueryMetrics {
    double p10 = 0.0;
    double p20 = 0.0;
    double ndcg20 = 0.0;
    double ndcg100 = 0.0;
    double ndcg = 0.0;

    bool operator==(const QueryMetrics&) const = default;
};

struct MetricReport {
    std::map<std::string, QueryMetrics> per_query;
    QueryMetrics mean;
    std::size_t queries_in_mean = 0;
    std::vector<std::string> warnings;
};

struct EvalOptions {
    bool include_unjudged_queries = false;  // average queries without relevant docs too
};

inline QueryMetrics query_metrics(const std::vector<std::string>& ranked, const Judgments& j) {
    return {precision_at_k(ranked, j, 10), precision_at_k(ranked, j, 20), ndcg_at_k(ranked, j, 20),
            ndcg_at_k(ranked, j, 100), ndcg_at_k(ranked, j)};
}

/// Per-query metrics for every judged query, and their mean over queries
/// with at least one relevant judgment. Queries judged but not retrieved
/// score zero; run queries without judgments are reported and skipped.
inline MetricReport evaluate(const RunFile& run, const Qrels& qrels, const EvalOptions& opts = {}) {
    MetricReport report;
    for (const auto& qid : run.qids()) {
        if (!qrels.by_query.contains(qid)) report.warnings.push_back("query '" + qid + "' has no judgments; skipped");
    }
    QueryMetrics sum;
    for (const auto& [qid, judgments] : qrels.by_query) {
        std::vector<std::string> ranked;
        for (const auto& r : run.for_query(qid)) ranked.push_back(r.doc_id);
        auto m = query_metrics(ranked, judgments);
        report.per_query.emplace(qid, m);
        const bool has_relevant =
            std::any_of(judgments.begin(), judgments.end(), [](const auto& kv) { return kv.second >= 1; });
        if (!has_relevant && !opts.include_unjudged_queries) continue;
        sum.p10 += m.p10;
        sum.p20 += m.p20;
        sum.ndcg20 += m.ndcg20;
        sum.ndcg100 += m.ndcg100;
        sum.ndcg += m.ndcg;
        ++report.queries_in_mean;
    }
    if (report.queries_in_mean) {
        const double n = static_cast<double>(report.queries_in_mean);
        report.mean = {sum.p10 / n, sum.p20 / n, sum.ndcg20 / n, sum.ndcg100 / n, sum.ndcg / n};
    }
    return report;
}

/// trec_eval-style `metric<TAB>qid<TAB>value` lines, with the mean under "all".
inline void write_report(std::ostream& out, const MetricReport& report) {
    char buf[64];
    auto emit = [&](const std::string& qid, const QueryMetrics& m) {
        const std::pair<const char*, double> rows[] = {
            {"P_10", m.p10}, {"P_20", m.p20}, {"ndcg_cut_20", m.ndcg20}, {"ndcg_cut_100", m.ndcg100}, {"ndcg", m.ndcg}};
        for (const auto& [name, v] : rows) {
            std::snprintf(buf, sizeof buf, "%.6f", v);
            out << name << '\t' << qid << '\t' << buf << '\n';
        }
    };
    for (const auto& [qid, m] : report.per_query) emit(qid, m);
    emit("all", report.mean);
}

}  // namespace podrank
