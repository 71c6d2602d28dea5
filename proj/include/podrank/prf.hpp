// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "podrank/error.hpp"
#include "podrank/index.hpp"

namespace podrank {

/// Discrete distribution over terms.
struct LanguageModel {
    std::map<std::string, double> probs;

    double prob(const std::string& term) const {
        auto it = probs.find(term);
        return it == probs.end() ? 0.0 : it->second;
    }

    double total() const {
        double s = 0.0;
        for (const auto& [_, p] : probs) s += p;
        return s;
    }

    bool operator==(const LanguageModel&) const = default;
};

struct Rm3Params {
    std::size_t fb_docs = 10;
    std::size_t fb_terms = 10;
    double rm3_alpha = 0.5;
    double dirichlet_mu = 2500.0;

    void validate() const {
        if (fb_docs < 1) throw ConfigError("fb_docs", "must be >= 1");
        if (fb_terms < 1) throw ConfigError("fb_terms", "must be >= 1");
        if (!(rm3_alpha >= 0.0 && rm3_alpha <= 1.0)) throw ConfigError("rm3_alpha", "must lie in [0, 1]");
        if (!(dirichlet_mu > 0.0)) throw ConfigError("dirichlet_mu", "must be > 0");
    }
};

/// Weighted query terms forming a distribution, ready for bm25_score.
struct ExpandedQuery {
    WeightedQuery terms;
};

/// Raised when no pseudo-relevant documents can be formed for a query;
/// callers fall back to the unexpanded query.
class ExpansionUnavailable : public Error {
public:
    using Error::Error;
};

/// Background model p(w|C) = cf(w) / |C|.
inline LanguageModel collection_lm(const InvertedIndex& index) {
    const auto& st = index.stats();
    if (index.empty() || st.total_tokens == 0) throw Error("collection model of an empty index");
    LanguageModel lm;
    const double total = static_cast<double>(st.total_tokens);
    for (const auto& [term, cf] : st.cf) lm.probs.emplace(term, static_cast<double>(cf) / total);
    return lm;
}

namespace detail {

inline double collection_prob(const InvertedIndex& index, InvertedIndex::TermId t) {
    return static_cast<double>(index.stats().coll_freq(index.term(t))) /
           static_cast<double>(index.stats().total_tokens);
}

// Dirichlet-smoothed p(w|D) evaluated for every vocabulary term in term-id order.
inline std::vector<double> smoothed_doc_probs(const InvertedIndex& index, InvertedIndex::DocIndex d, double mu,
                                              const std::vector<double>& background) {
    const double len = static_cast<double>(index.doc_len(d));
    std::vector<double> counts(index.num_terms(), 0.0);
    for (const auto& [t, tf] : index.doc_terms(d)) counts[t] = static_cast<double>(tf);
    std::vector<double> probs(index.num_terms());
    for (std::size_t t = 0; t < probs.size(); ++t) probs[t] = (counts[t] + mu * background[t]) / (len + mu);
    return probs;
}

inline std::vector<double> background_probs(const InvertedIndex& index) {
    if (index.empty() || index.stats().total_tokens == 0) throw Error("collection model of an empty index");
    std::vector<double> bg(index.num_terms());
    for (InvertedIndex::TermId t = 0; t < bg.size(); ++t) bg[t] = collection_prob(index, t);
    return bg;
}

struct FeedbackSet {
    std::vector<InvertedIndex::DocIndex> docs;
    std::vector<double> log_likelihood;  // sum_i log p(q_i | D), same order as docs
    std::vector<InvertedIndex::TermId> query;  // in-vocabulary query term occurrences
};

// Top fb_docs documents by Dirichlet query likelihood, computed in log space.
// Query terms outside the vocabulary give every document probability zero
// and are left out of the product.
inline FeedbackSet feedback_set(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                                const Rm3Params& params, const std::vector<double>& background) {
    FeedbackSet fb;
    for (const auto& term : query_terms) {
        if (auto t = index.find_term(term)) fb.query.push_back(*t);
    }
    if (fb.query.empty() || index.empty()) throw ExpansionUnavailable("no query term occurs in the collection");

    const double mu = params.dirichlet_mu;
    std::vector<std::pair<double, InvertedIndex::DocIndex>> ranked;
    ranked.reserve(index.num_docs());
    for (InvertedIndex::DocIndex d = 0; d < index.num_docs(); ++d) {
        const double len = static_cast<double>(index.doc_len(d));
        double ll = 0.0;
        for (auto t : fb.query) {
            ll += std::log((static_cast<double>(index.tf(t, d)) + mu * background[t]) / (len + mu));
        }
        ranked.emplace_back(ll, d);
    }
    // Doc indices follow doc id order, so the index breaks ties by doc id.
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    const std::size_t n = std::min(params.fb_docs, ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
        fb.docs.push_back(ranked[i].second);
        fb.log_likelihood.push_back(ranked[i].first);
    }
    return fb;
}

inline LanguageModel normalized(const InvertedIndex& index, const std::vector<double>& mass) {
    double sum = 0.0;
    for (double m : mass) sum += m;
    if (!(sum > 0.0) || !std::isfinite(sum)) throw ExpansionUnavailable("relevance model has no mass");
    LanguageModel lm;
    for (InvertedIndex::TermId t = 0; t < mass.size(); ++t) {
        if (mass[t] > 0.0) lm.probs.emplace(index.term(t), mass[t] / sum);
    }
    return lm;
}

}  // namespace detail

/// p(w|D) = (c(w,D) + mu p(w|C)) / (|D| + mu) over the whole vocabulary.
inline LanguageModel smoothed_doc_lm(const std::string& doc_id, const InvertedIndex& index, double mu) {
    if (!(mu > 0.0)) throw ConfigError("dirichlet_mu", "must be > 0");
    auto d = index.doc_index(doc_id);
    auto bg = detail::background_probs(index);
    auto probs = detail::smoothed_doc_probs(index, d, mu, bg);
    LanguageModel lm;
    for (InvertedIndex::TermId t = 0; t < probs.size(); ++t) lm.probs.emplace(index.term(t), probs[t]);
    return lm;
}

/// RM1: feedback document models averaged with query-likelihood weights
/// under a uniform document prior.
inline LanguageModel rm1(const std::vector<std::string>& query_terms, const InvertedIndex& index,
                         const Rm3Params& params = {}) {
    params.validate();
    if (index.empty()) throw ExpansionUnavailable("empty collection");
    auto bg = detail::background_probs(index);
    auto fb = detail::feedback_set(index, query_terms, params, bg);
    // Shift by the best log-likelihood; the common factor cancels on normalization.
    const double top = fb.log_likelihood.front();
    std::vector<double> mass(index.num_terms(), 0.0);
    for (std::size_t i = 0; i < fb.docs.size(); ++i) {
        const double w = std::exp(fb.log_likelihood[i] - top);
        auto probs = detail::smoothed_doc_probs(index, fb.docs[i], params.dirichlet_mu, bg);
        for (std::size_t t = 0; t < mass.size(); ++t) mass[t] += w * probs[t];
    }
    return detail::normalized(index, mass);
}

/// RM2: p(w) * prod_i sum_D p(q_i|D) p(w|D) p(D) / p(w), uniform p(D) over
/// the same feedback set as RM1.
inline LanguageModel rm2(const std::vector<std::string>& query_terms, const InvertedIndex& index,
                         const Rm3Params& params = {}) {
    params.validate();
    if (index.empty()) throw ExpansionUnavailable("empty collection");
    auto bg = detail::background_probs(index);
    auto fb = detail::feedback_set(index, query_terms, params, bg);
    const double prior = 1.0 / static_cast<double>(fb.docs.size());

    std::vector<std::vector<double>> doc_probs;
    doc_probs.reserve(fb.docs.size());
    for (auto d : fb.docs) doc_probs.push_back(detail::smoothed_doc_probs(index, d, params.dirichlet_mu, bg));

    std::vector<double> log_mass(index.num_terms(), -std::numeric_limits<double>::infinity());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t w = 0; w < log_mass.size(); ++w) {
        if (!(bg[w] > 0.0)) continue;
        double lm = std::log(bg[w]);
        for (auto q : fb.query) {
            double inner = 0.0;
            for (const auto& probs : doc_probs) inner += probs[q] * probs[w] * prior / bg[w];
            lm += std::log(inner);
        }
        log_mass[w] = lm;
        top = std::max(top, lm);
    }
    std::vector<double> mass(log_mass.size(), 0.0);
    for (std::size_t w = 0; w < mass.size(); ++w) {
        if (std::isfinite(log_mass[w])) mass[w] = std::exp(log_mass[w] - top);
    }
    return detail::normalized(index, mass);
}

/// Maximum-likelihood query model: uniform over term occurrences.
inline LanguageModel query_model(const std::vector<std::string>& query_terms) {
    LanguageModel lm;
    if (query_terms.empty()) return lm;
    const double unit = 1.0 / static_cast<double>(query_terms.size());
    for (const auto& t : query_terms) lm.probs[t] += unit;
    return lm;
}

/// (1 - alpha) p(w|Q) + alpha p1(w|Q). Zero-probability terms are dropped.
inline LanguageModel rm3_interpolate(const LanguageModel& query_lm, const LanguageModel& relevance_lm,
                                     double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("rm3_alpha", "must lie in [0, 1]");
    LanguageModel out;
    auto put = [&](const std::string& term) {
        if (out.probs.contains(term)) return;
        double p = (1.0 - alpha) * query_lm.prob(term) + alpha * relevance_lm.prob(term);
        if (p > 0.0) out.probs.emplace(term, p);
    };
    for (const auto& [term, _] : query_lm.probs) put(term);
    for (const auto& [term, _] : relevance_lm.probs) put(term);
    return out;
}

/// BM25+RM3 query expansion. Keeps every original query term plus the
/// fb_terms most probable new terms of the interpolated model, renormalized.
/// Terms are ordered by descending weight, then term.
inline ExpandedQuery expand_query(const InvertedIndex& index, const std::vector<std::string>& query_terms,
                                  const Rm3Params& params = {}) {
    params.validate();
    auto relevance = rm1(query_terms, index, params);
    auto original = query_model(query_terms);
    auto mixed = rm3_interpolate(original, relevance, params.rm3_alpha);

    std::vector<WeightedTerm> kept;
    std::vector<WeightedTerm> candidates;
    for (const auto& [term, p] : mixed.probs) {
        (original.probs.contains(term) ? kept : candidates).push_back({term, p});
    }
    auto by_weight = [](const WeightedTerm& a, const WeightedTerm& b) {
        if (a.weight != b.weight) return a.weight > b.weight;
        return a.term < b.term;
    };
    std::sort(candidates.begin(), candidates.end(), by_weight);
    if (candidates.size() > params.fb_terms) candidates.resize(params.fb_terms);
    kept.insert(kept.end(), candidates.begin(), candidates.end());

    double sum = 0.0;
    for (const auto& t : kept) sum += t.weight;
    if (!(sum > 0.0)) throw ExpansionUnavailable("expanded query has no mass");
    for (auto& t : kept) t.weight /= sum;
    std::sort(kept.begin(), kept.end(), by_weight);
    return ExpandedQuery{std::move(kept)};
}

}  // namespace podrank
