// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "podrank/error.hpp"
#include "podrank/ranked_list.hpp"
#include "podrank/text.hpp"

namespace podrank {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const {
        if (!(k1 >= 0.0)) throw ConfigError("k1", "must be >= 0");
        if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("b", "must lie in [0, 1]");
    }
};

struct CollectionStats {
    std::uint64_t num_docs = 0;
    std::uint64_t total_tokens = 0;
    double avgdl = 0.0;
    std::map<std::string, std::uint64_t> df;
    std::map<std::string, std::uint64_t> cf;

    std::uint64_t doc_freq(const std::string& term) const {
        auto it = df.find(term);
        return it == df.end() ? 0 : it->second;
    }
    std::uint64_t coll_freq(const std::string& term) const {
        auto it = cf.find(term);
        return it == cf.end() ? 0 : it->second;
    }
};

struct Posting {
    std::uint32_t doc = 0;  // index into the doc table (doc ids sorted ascending)
    std::uint64_t tf = 0;

    bool operator==(const Posting&) const = default;
};

/// A query term with its multiplicative weight (1 for plain queries).
struct WeightedTerm {
    std::string term;
    double weight = 1.0;

    bool operator==(const WeightedTerm&) const = default;
};

using WeightedQuery = std::vector<WeightedTerm>;

inline WeightedQuery plain_query(const std::vector<std::string>& tokens) {
    WeightedQuery q;
    q.reserve(tokens.size());
    for (const auto& t : tokens) q.push_back({t, 1.0});
    return q;
}

/// Immutable term -> postings index over string-keyed documents.
///
/// Documents are numbered by ascending doc id and terms by ascending byte
/// order, so the structure depends only on the set of input documents and
/// not on their order. A forward (doc -> terms) view is derived from the
/// postings for language-model estimation.
class InvertedIndex {
public:
    using TermId = std::uint32_t;
    using DocIndex = std::uint32_t;

    InvertedIndex() = default;

    /// Builds from raw (doc_id, text) pairs. Throws DuplicateError on a repeated id.
    static InvertedIndex build(const std::vector<std::pair<std::string, std::string>>& docs,
                               const Tokenizer& tokenizer = {}) {
        std::vector<std::size_t> order(docs.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return docs[a].first < docs[b].first; });
        for (std::size_t i = 1; i < order.size(); ++i) {
            if (docs[order[i]].first == docs[order[i - 1]].first) throw DuplicateError(docs[order[i]].first);
        }

        std::vector<std::string> ids;
        std::vector<std::uint64_t> lens;
        std::map<std::string, std::vector<Posting>> postings;
        ids.reserve(docs.size());
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const auto& [id, text] = docs[order[rank]];
            auto tokens = tokenizer(text);
            std::map<std::string, std::uint64_t> counts;
            for (auto& t : tokens) ++counts[t];
            for (auto& [term, tf] : counts) {
                postings[term].push_back({static_cast<DocIndex>(rank), tf});
            }
            ids.push_back(id);
            lens.push_back(tokens.size());
        }
        std::vector<std::string> stop(tokenizer.stopwords().begin(), tokenizer.stopwords().end());
        std::sort(stop.begin(), stop.end());
        return from_parts(std::move(ids), std::move(lens), std::move(postings), std::move(stop));
    }

    /// Assembles an index from already-sorted parts and derives all statistics.
    /// Validates the structural invariants; throws Error on violation.
    static InvertedIndex from_parts(std::vector<std::string> doc_ids, std::vector<std::uint64_t> doc_lens,
                                    std::map<std::string, std::vector<Posting>> postings,
                                    std::vector<std::string> stopwords = {}) {
        if (doc_ids.size() != doc_lens.size()) throw Error("doc table size mismatch");
        for (std::size_t i = 1; i < doc_ids.size(); ++i) {
            if (!(doc_ids[i - 1] < doc_ids[i])) throw Error("doc ids not strictly ascending");
        }
        InvertedIndex idx;
        idx.doc_ids_ = std::move(doc_ids);
        idx.doc_lens_ = std::move(doc_lens);
        idx.stopwords_ = std::move(stopwords);
        idx.forward_.assign(idx.doc_ids_.size(), {});
        std::vector<std::uint64_t> tf_sum(idx.doc_ids_.size(), 0);

        auto& st = idx.stats_;
        st.num_docs = idx.doc_ids_.size();
        for (auto len : idx.doc_lens_) st.total_tokens += len;
        st.avgdl = st.num_docs ? static_cast<double>(st.total_tokens) / static_cast<double>(st.num_docs) : 0.0;

        for (auto& [term, list] : postings) {
            if (list.empty()) throw Error("empty posting list for '" + term + "'");
            auto tid = static_cast<TermId>(idx.terms_.size());
            std::uint64_t cf = 0;
            for (std::size_t i = 0; i < list.size(); ++i) {
                const auto& p = list[i];
                if (p.doc >= idx.doc_ids_.size()) throw Error("posting references unknown doc");
                if (p.tf == 0) throw Error("zero term frequency in postings of '" + term + "'");
                if (i > 0 && list[i - 1].doc >= p.doc) throw Error("postings not sorted for '" + term + "'");
                cf += p.tf;
                tf_sum[p.doc] += p.tf;
                idx.forward_[p.doc].push_back({tid, p.tf});
            }
            st.df.emplace(term, list.size());
            st.cf.emplace(term, cf);
            idx.term_ids_.emplace(term, tid);
            idx.terms_.push_back(term);
            idx.postings_.push_back(std::move(list));
        }
        for (std::size_t d = 0; d < tf_sum.size(); ++d) {
            if (tf_sum[d] != idx.doc_lens_[d]) throw Error("doc length disagrees with postings for '" + idx.doc_ids_[d] + "'");
            idx.doc_index_.emplace(idx.doc_ids_[d], static_cast<DocIndex>(d));
        }
        return idx;
    }

    const CollectionStats& stats() const noexcept { return stats_; }
    std::size_t num_docs() const noexcept { return doc_ids_.size(); }
    std::size_t num_terms() const noexcept { return terms_.size(); }
    bool empty() const noexcept { return doc_ids_.empty(); }

    const std::string& doc_id(DocIndex d) const { return doc_ids_.at(d); }
    std::uint64_t doc_len(DocIndex d) const { return doc_lens_.at(d); }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const std::vector<std::uint64_t>& doc_lens() const noexcept { return doc_lens_; }

    std::optional<DocIndex> find_doc(const std::string& id) const {
        auto it = doc_index_.find(id);
        if (it == doc_index_.end()) return std::nullopt;
        return it->second;
    }

    DocIndex doc_index(const std::string& id) const {
        auto d = find_doc(id);
        if (!d) throw NotFoundError(id);
        return *d;
    }

    std::optional<TermId> find_term(const std::string& term) const {
        auto it = term_ids_.find(term);
        if (it == term_ids_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& term(TermId t) const { return terms_.at(t); }
    const std::vector<std::string>& terms() const noexcept { return terms_; }
    std::span<const Posting> postings(TermId t) const { return postings_.at(t); }

    /// (term id, tf) pairs of one document, ascending by term id.
    std::span<const std::pair<TermId, std::uint64_t>> doc_terms(DocIndex d) const { return forward_.at(d); }

    std::uint64_t tf(TermId t, DocIndex d) const {
        const auto& list = postings_.at(t);
        auto it = std::lower_bound(list.begin(), list.end(), d,
                                   [](const Posting& p, DocIndex doc) { return p.doc < doc; });
        return (it != list.end() && it->doc == d) ? it->tf : 0;
    }

    std::uint64_t tf(const std::string& term, DocIndex d) const {
        auto t = find_term(term);
        return t ? tf(*t, d) : 0;
    }

    const std::vector<std::string>& stopwords() const noexcept { return stopwords_; }

    /// Tokenizer configured with the stopwords used at build time.
    Tokenizer tokenizer() const {
        return Tokenizer(std::unordered_set<std::string>(stopwords_.begin(), stopwords_.end()));
    }

private:
    std::vector<std::string> doc_ids_;
    std::vector<std::uint64_t> doc_lens_;
    std::unordered_map<std::string, DocIndex> doc_index_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, TermId> term_ids_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::vector<std::pair<TermId, std::uint64_t>>> forward_;
    std::vector<std::string> stopwords_;
    CollectionStats stats_;
};

inline InvertedIndex build_index(const std::vector<std::pair<std::string, std::string>>& docs,
                                 const Tokenizer& tokenizer = {}) {
    return InvertedIndex::build(docs, tokenizer);
}

/// ln((N - n + 0.5) / (n + 0.5) + 1); strictly positive for 0 <= n <= N.
inline double idf(std::uint64_t num_docs, std::uint64_t doc_freq) {
    if (num_docs == 0) throw Error("idf undefined for an empty collection");
    const double n = static_cast<double>(doc_freq);
    return std::log((static_cast<double>(num_docs) - n + 0.5) / (n + 0.5) + 1.0);
}

inline double idf(const std::string& term, const CollectionStats& stats) {
    return idf(stats.num_docs, stats.doc_freq(term));
}

/// Saturated term-frequency component of BM25 for one term.
inline double bm25_term(double tf, double doc_len, double avgdl, double idf_value, const Bm25Params& p) {
    if (tf <= 0.0) return 0.0;
    const double norm = avgdl > 0.0 ? doc_len / avgdl : 0.0;
    return idf_value * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * norm));
}

namespace detail {

inline double bm25_score_at(const WeightedQuery& query, InvertedIndex::DocIndex d, const InvertedIndex& index,
                            const Bm25Params& params) {
    const auto& st = index.stats();
    const double len = static_cast<double>(index.doc_len(d));
    double score = 0.0;
    for (const auto& qt : query) {
        auto t = index.find_term(qt.term);
        if (!t) continue;
        auto f = index.tf(*t, d);
        if (f == 0) continue;
        score += qt.weight * bm25_term(static_cast<double>(f), len, st.avgdl, idf(st.num_docs, st.doc_freq(qt.term)),
                                       params);
    }
    return score;
}

}  // namespace detail

/// Sum over query terms of weight * IDF * saturated tf. Terms are
/// accumulated in query order so search() reproduces this value exactly.
inline double bm25_score(const WeightedQuery& query, const std::string& doc_id, const InvertedIndex& index,
                         const Bm25Params& params = {}) {
    return detail::bm25_score_at(query, index.doc_index(doc_id), index, params);
}

/// Top-k documents containing at least one query term.
inline RankedList search(const InvertedIndex& index, const WeightedQuery& query, std::size_t k,
                         const Bm25Params& params = {}) {
    if (k == 0) throw ConfigError("k", "must be >= 1");
    params.validate();
    std::vector<InvertedIndex::DocIndex> matched;
    for (const auto& qt : query) {
        if (auto t = index.find_term(qt.term)) {
            for (const auto& p : index.postings(*t)) matched.push_back(p.doc);
        }
    }
    std::sort(matched.begin(), matched.end());
    matched.erase(std::unique(matched.begin(), matched.end()), matched.end());

    std::vector<ScoredDoc> scored;
    scored.reserve(matched.size());
    for (auto d : matched) scored.push_back({index.doc_id(d), detail::bm25_score_at(query, d, index, params)});
    // Partial sort is enough for the cutoff, then the usual ordering.
    if (scored.size() > k) {
        std::nth_element(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k - 1), scored.end(),
                         ranks_before);
        scored.resize(k);
    }
    return RankedList::from_unsorted(std::move(scored));
}

}  // namespace podrank
