// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "podrank/error.hpp"
#include "podrank/ranked_list.hpp"
#include "podrank/rerank/similarity.hpp"

namespace podrank {

struct FusionParams {
    double fusion_alpha = 1.0;

    void validate() const {
        if (!(fusion_alpha >= 0.0) || !std::isfinite(fusion_alpha)) throw ConfigError("fusion_alpha", "must be >= 0");
    }
};

/// (x + 2 alpha (sigmoid(lex) - 0.5)) / (1 + alpha). The lexical score is
/// non-negative, so its sigmoid lies in [0.5, 1) and the shifted term in [0, 1).
inline double fuse(double neural, double lexical, const FusionParams& params = {}) {
    params.validate();
    if (!(lexical >= 0.0)) throw Error("lexical score must be >= 0, got " + std::to_string(lexical));
    const double a = params.fusion_alpha;
    return (neural + 2.0 * a * (sigmoid(lexical) - 0.5)) / (1.0 + a);
}

/// Fuses every entry of `neural` with its lexical score.
inline RankedList fuse_ranked(const RankedList& neural, const RankedList& lexical, const FusionParams& params = {}) {
    std::map<std::string, double> lex;
    for (const auto& e : lexical) lex.emplace(e.doc_id, e.score);
    std::vector<ScoredDoc> out;
    out.reserve(neural.size());
    for (const auto& e : neural) {
        auto it = lex.find(e.doc_id);
        if (it == lex.end()) throw Error("no lexical score for '" + e.doc_id + "'");
        out.push_back({e.doc_id, fuse(e.score, it->second, params)});
    }
    return RankedList::from_unsorted(std::move(out));
}

}  // namespace podrank
