// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "podrank/embedding.hpp"
#include "podrank/error.hpp"
#include "podrank/rerank/similarity.hpp"

namespace podrank {

enum class RegressionVariant { last_layer, concat_last_two };

inline constexpr const char* kSeparatorToken = "[SEP]";

/// Linear layer plus sigmoid over a pooled sequence representation.
/// The concat variant pools [last layer ; second-to-last layer] per token,
/// so its weight vector has length 2 * dim.
struct RegressionHead {
    std::vector<double> weights;
    double bias = 0.0;
    RegressionVariant variant = RegressionVariant::last_layer;

    static std::size_t input_size(RegressionVariant v, std::size_t dim) {
        return v == RegressionVariant::concat_last_two ? 2 * dim : dim;
    }

    static RegressionHead zeros(RegressionVariant v, std::size_t dim) {
        RegressionHead h;
        h.variant = v;
        h.weights.assign(input_size(v, dim), 0.0);
        return h;
    }

    bool operator==(const RegressionHead&) const = default;
};

/// Query, description and segment tokens joined with separator tokens.
inline std::vector<std::string> joint_tokens(const std::vector<std::string>& query,
                                             const std::vector<std::string>& description,
                                             const std::vector<std::string>& segment) {
    std::vector<std::string> out;
    out.reserve(query.size() + description.size() + segment.size() + 2);
    out.insert(out.end(), query.begin(), query.end());
    out.emplace_back(kSeparatorToken);
    out.insert(out.end(), description.begin(), description.end());
    out.emplace_back(kSeparatorToken);
    out.insert(out.end(), segment.begin(), segment.end());
    return out;
}

/// Mean over tokens of the last layer, or of the per-token concatenation
/// of the last two layers.
inline std::vector<double> pooled_features(const TokenEmbeddings& joint, RegressionVariant variant) {
    if (joint.num_tokens() == 0) throw Error("regression input has no tokens");
    const bool concat = variant == RegressionVariant::concat_last_two;
    if (concat && joint.layers < 2) throw Error("concat variant needs at least two layers");
    const std::size_t d = joint.dim;
    std::vector<double> pooled(RegressionHead::input_size(variant, d), 0.0);
    const std::size_t last = joint.layers - 1;
    for (std::size_t t = 0; t < joint.num_tokens(); ++t) {
        auto v = joint.vec(last, t);
        for (std::size_t j = 0; j < d; ++j) pooled[j] += v[j];
        if (concat) {
            auto u = joint.vec(last - 1, t);
            for (std::size_t j = 0; j < d; ++j) pooled[d + j] += u[j];
        }
    }
    const double n = static_cast<double>(joint.num_tokens());
    for (auto& x : pooled) x /= n;
    return pooled;
}

inline double regression_logit(const std::vector<double>& pooled, const RegressionHead& head) {
    if (pooled.size() != head.weights.size()) {
        throw Error("regression head expects " + std::to_string(head.weights.size()) + " inputs, got " +
                    std::to_string(pooled.size()));
    }
    double s = head.bias;
    for (std::size_t j = 0; j < pooled.size(); ++j) s += pooled[j] * head.weights[j];
    return s;
}

/// sigmoid(weights . pooled + bias) in (0, 1).
inline double regression_score(const TokenEmbeddings& joint, const RegressionHead& head) {
    return sigmoid(regression_logit(pooled_features(joint, head.variant), head));
}

}  // namespace podrank
