// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "podrank/embedding.hpp"
#include "podrank/rerank/regression.hpp"
#include "podrank/rerank/train.hpp"

namespace podrank {

/// Linearly separable toy pairs for exercising head training.
///
/// Even indices are positives: the document repeats the query words and
/// adds words from a "relevant" pool. Odd indices are negatives: the
/// document only holds words from a disjoint "irrelevant" pool, so its hash
/// vectors are nearly orthogonal to the query's.
inline std::vector<LabeledPair> synthetic_pairs(std::size_t n, const HashEmbeddingConfig& emb, std::uint64_t seed) {
    std::uint64_t state = seed ^ 0x5eedULL;
    auto pick = [&state](const char* prefix, std::size_t pool) {
        return std::string(prefix) + std::to_string(splitmix64(state) % pool);
    };
    std::vector<LabeledPair> pairs;
    pairs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const int label = (i % 2 == 0) ? 1 : 0;
        std::vector<std::string> query, doc;
        for (int k = 0; k < 3; ++k) query.push_back(pick("q", 100));
        if (label) {
            doc = query;
            for (int k = 0; k < 4; ++k) doc.push_back(pick("rel", 10));
        } else {
            for (int k = 0; k < 7; ++k) doc.push_back(pick("irr", 10));
        }
        LabeledPair p;
        p.label = label;
        p.query = hash_embed(query, emb.dim, emb.layers, emb.seed);
        p.doc = hash_embed(doc, emb.dim, emb.layers, emb.seed);
        p.joint = hash_embed(joint_tokens(query, {}, doc), emb.dim, emb.layers, emb.seed);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace podrank
