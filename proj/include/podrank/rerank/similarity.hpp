// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "podrank/embedding.hpp"
#include "podrank/error.hpp"

namespace podrank {

/// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

/// RBF kernels over cosine similarity. The default bank has an exact-match
/// kernel at 1.0 (sigma 1e-3) and ten soft-match kernels from 0.9 to -0.9.
struct KernelBank {
    std::vector<double> mus;
    std::vector<double> sigmas;

    static KernelBank standard() {
        KernelBank bank;
        bank.mus = {1.0, 0.9, 0.7, 0.5, 0.3, 0.1, -0.1, -0.3, -0.5, -0.7, -0.9};
        bank.sigmas.assign(bank.mus.size(), 0.1);
        bank.sigmas[0] = 1e-3;
        return bank;
    }

    std::size_t size() const noexcept { return mus.size(); }

    void validate() const {
        if (mus.empty() || mus.size() != sigmas.size()) throw ConfigError("kernels", "need |mus| == |sigmas| >= 1");
        for (double s : sigmas) {
            if (!(s > 0.0)) throw ConfigError("sigmas", "all sigmas must be > 0");
        }
        for (double m : mus) {
            if (!(m >= -1.0 && m <= 1.0)) throw ConfigError("mus", "all mus must lie in [-1, 1]");
        }
    }

    bool operator==(const KernelBank&) const = default;
};

/// Trainable part of the kernel-pooling scorer: two bias-free linear maps
/// over per-kernel features and the scalar weights that mix them.
struct ScoringHead {
    std::vector<double> w1;  // over log-normalized kernel features
    std::vector<double> w2;  // over length-normalized kernel features
    double head_alpha = 0.5;
    double head_beta = 0.5;
    double log_base = std::numbers::e;
    double epsilon = 1e-10;

    static ScoringHead zeros(std::size_t kernels) {
        ScoringHead h;
        h.w1.assign(kernels, 0.0);
        h.w2.assign(kernels, 0.0);
        return h;
    }

    void validate(std::size_t kernels) const {
        if (w1.size() != kernels || w2.size() != kernels) {
            throw ConfigError("w1/w2", "length must equal the kernel count " + std::to_string(kernels));
        }
        if (!(log_base > 1.0)) throw ConfigError("log_base", "must be > 1");
    }

    bool operator==(const ScoringHead&) const = default;
};

/// Every intermediate of head_score, exposed for inspection and gradients.
struct HeadTrace {
    std::vector<double> log_features;  // per kernel: sum_i log_b(max(K_i, eps))
    std::vector<double> len_features;  // per kernel: sum_i K_i / d_len
    double s_log = 0.0;
    double s_len = 0.0;
    double logit = 0.0;
    double score = 0.0;
};

/// Logistic function, kept inside the open interval (0, 1) even where
/// the exact value rounds to 0 or 1.
inline double sigmoid(double x) noexcept {
    constexpr double lo = 0x1.0p-1074;
    constexpr double hi = 1.0 - 0x1.0p-53;
    double y;
    if (x >= 0.0) {
        y = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        y = e / (1.0 + e);
    }
    return std::clamp(y, lo, hi);
}

/// Cosine similarity; defined as 0 when either vector has zero norm.
inline double cosine(std::span<const float> a, std::span<const float> b) noexcept {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// M(i, j) = cos(q_i, d_j) over the last layer of both inputs.
inline Matrix similarity_matrix(const TokenEmbeddings& query, const TokenEmbeddings& doc) {
    if (query.dim != doc.dim) throw Error("embedding dimension mismatch");
    if (query.num_tokens() == 0 || doc.num_tokens() == 0) throw Error("similarity of an empty token sequence");
    const auto ql = query.layers - 1;
    const auto dl = doc.layers - 1;
    Matrix m(query.num_tokens(), doc.num_tokens());
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) m(i, j) = cosine(query.vec(ql, i), doc.vec(dl, j));
    }
    return m;
}

/// K(k, i) = sum_j exp(-(M(i, j) - mu_k)^2 / (2 sigma_k^2)).
inline Matrix kernel_pool(const Matrix& sim, const KernelBank& bank) {
    bank.validate();
    Matrix pooled(bank.size(), sim.rows);
    for (std::size_t k = 0; k < bank.size(); ++k) {
        const double mu = bank.mus[k];
        const double denom = 2.0 * bank.sigmas[k] * bank.sigmas[k];
        for (std::size_t i = 0; i < sim.rows; ++i) {
            double acc = 0.0;
            for (double m : sim.row(i)) acc += std::exp(-(m - mu) * (m - mu) / denom);
            pooled(k, i) = acc;
        }
    }
    return pooled;
}

/// Per-kernel log and length features of pooled kernel scores.
inline void kernel_features(const Matrix& pooled, std::size_t doc_len, double log_base, double epsilon,
                            std::vector<double>& log_features, std::vector<double>& len_features) {
    if (doc_len == 0) throw Error("document length must be >= 1");
    const double ln_base = std::log(log_base);
    const double len = static_cast<double>(doc_len);
    log_features.assign(pooled.rows, 0.0);
    len_features.assign(pooled.rows, 0.0);
    for (std::size_t k = 0; k < pooled.rows; ++k) {
        for (double v : pooled.row(k)) {
            log_features[k] += std::log(std::max(v, epsilon)) / ln_base;
            len_features[k] += v / len;
        }
    }
}

inline HeadTrace head_score(const Matrix& pooled, std::size_t doc_len, const ScoringHead& head) {
    head.validate(pooled.rows);
    HeadTrace tr;
    kernel_features(pooled, doc_len, head.log_base, head.epsilon, tr.log_features, tr.len_features);
    for (std::size_t k = 0; k < pooled.rows; ++k) {
        tr.s_log += tr.log_features[k] * head.w1[k];
        tr.s_len += tr.len_features[k] * head.w2[k];
    }
    tr.logit = tr.s_log * head.head_alpha + tr.s_len * head.head_beta;
    tr.score = sigmoid(tr.logit);
    return tr;
}

/// Kernel-pooling relevance score in (0, 1).
inline double sim_score(const TokenEmbeddings& query, const TokenEmbeddings& doc, const KernelBank& bank,
                        const ScoringHead& head) {
    auto pooled = kernel_pool(similarity_matrix(query, doc), bank);
    return head_score(pooled, doc.num_tokens(), head).score;
}

}  // namespace podrank
