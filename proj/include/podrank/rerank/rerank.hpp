// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "podrank/embedding.hpp"
#include "podrank/error.hpp"
#include "podrank/ranked_list.hpp"
#include "podrank/rerank/head_io.hpp"
#include "podrank/rerank/regression.hpp"
#include "podrank/rerank/similarity.hpp"

namespace podrank {

/// Neural relevance of one segment for a fixed query.
class SegmentScorer {
public:
    virtual ~SegmentScorer() = default;
    virtual double score(const std::string& segment_id) const = 0;
};

/// Embedding key of the joint (query, segment) sequence used by regression heads.
inline std::string joint_key(const std::string& qid, const std::string& segment_id) {
    return qid + "|" + segment_id;
}

class SimilarityScorer final : public SegmentScorer {
public:
    SimilarityScorer(const EmbeddingProvider& provider, const std::string& query_key, KernelBank bank,
                     ScoringHead head)
        : provider_(provider), query_(provider.lookup(query_key)), bank_(std::move(bank)), head_(std::move(head)) {
        bank_.validate();
        head_.validate(bank_.size());
    }

    double score(const std::string& segment_id) const override {
        return sim_score(query_, provider_.lookup(segment_id), bank_, head_);
    }

private:
    const EmbeddingProvider& provider_;
    TokenEmbeddings query_;
    KernelBank bank_;
    ScoringHead head_;
};

class RegressionScorer final : public SegmentScorer {
public:
    RegressionScorer(const EmbeddingProvider& provider, std::string qid, RegressionHead head)
        : provider_(provider), qid_(std::move(qid)), head_(std::move(head)) {}

    double score(const std::string& segment_id) const override {
        return regression_score(provider_.lookup(joint_key(qid_, segment_id)), head_);
    }

private:
    const EmbeddingProvider& provider_;
    std::string qid_;
    RegressionHead head_;
};

/// Always returns the same value; handy for isolating tie-breaking.
class ConstantScorer final : public SegmentScorer {
public:
    explicit ConstantScorer(double value) : value_(value) {}
    double score(const std::string&) const override { return value_; }

private:
    double value_;
};

inline std::unique_ptr<SegmentScorer> make_scorer(const HeadParams& params, const EmbeddingProvider& provider,
                                                  const std::string& qid, const std::string& query_key) {
    if (params.variant == ScorerVariant::sim) {
        return std::make_unique<SimilarityScorer>(provider, query_key, params.bank, params.sim);
    }
    return std::make_unique<RegressionScorer>(provider, qid, params.reg);
}

/// Re-scores the first `cutoff` candidates and orders them by neural score
/// (ties by ascending id). Candidates past the cutoff are dropped.
inline RankedList rerank_segments(const RankedList& candidates, const SegmentScorer& scorer,
                                  std::size_t cutoff = 1000) {
    std::vector<ScoredDoc> scored;
    const std::size_t n = std::min(cutoff, candidates.size());
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& id = candidates[i].doc_id;
        try {
            scored.push_back({id, scorer.score(id)});
        } catch (const NotFoundError&) {
            throw Error("missing embedding for segment '" + id + "'");
        }
    }
    return RankedList::from_unsorted(std::move(scored));
}

}  // namespace podrank
