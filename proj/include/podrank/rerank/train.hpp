// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "podrank/embedding.hpp"
#include "podrank/error.hpp"
#include "podrank/rerank/regression.hpp"
#include "podrank/rerank/similarity.hpp"

namespace podrank {

enum class LossKind { cross_entropy, hinge };

struct TrainConfig {
    LossKind loss = LossKind::cross_entropy;
    double learning_rate = 1e-3;
    double weight_decay = 0.01;
    std::size_t max_epochs = 5;
    std::size_t patience = 2;
    std::uint64_t seed = 42;
    std::size_t batch_size = 1;
    std::size_t max_steps = 0;  // 0 = no cap beyond max_epochs

    void validate() const {
        if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate", "must be >= 0");
        if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be >= 0");
        if (patience < 1) throw ConfigError("patience", "must be >= 1");
        if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
    }
};

/// Training pair. Similarity heads read `query` and `doc`; regression heads
/// read `joint` (query [SEP] description [SEP] segment).
struct LabeledPair {
    TokenEmbeddings query;
    TokenEmbeddings doc;
    TokenEmbeddings joint;
    int label = 0;
};

// -- losses on the pre-sigmoid logit ---------------------------------------

inline double loss_value(LossKind kind, double logit, int label) {
    if (kind == LossKind::cross_entropy) {
        // softplus(s) - y s, i.e. -[y log p + (1 - y) log(1 - p)] with p = sigmoid(s)
        const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::fabs(logit)));
        return softplus - static_cast<double>(label) * logit;
    }
    const double sign = label ? 1.0 : -1.0;
    return std::max(0.0, 1.0 - sign * logit);
}

inline double loss_slope(LossKind kind, double logit, int label) {
    if (kind == LossKind::cross_entropy) {
        const double p = logit >= 0.0 ? 1.0 / (1.0 + std::exp(-logit)) : std::exp(logit) / (1.0 + std::exp(logit));
        return p - static_cast<double>(label);
    }
    const double sign = label ? 1.0 : -1.0;
    return (1.0 - sign * logit > 0.0) ? -sign : 0.0;
}

// -- trainable models --------------------------------------------------------
//
// A model exposes a flat parameter vector, the logit for a precomputed
// feature record and d(logit)/d(parameter).

/// Kernel features of one (query, doc) pair. They do not depend on the
/// head parameters, so they are computed once per example.
struct SimFeatures {
    std::vector<double> log_features;
    std::vector<double> len_features;
};

struct SimModel {
    using Features = SimFeatures;
    KernelBank bank;
    ScoringHead head;

    Features featurize(const LabeledPair& pair) const {
        auto pooled = kernel_pool(similarity_matrix(pair.query, pair.doc), bank);
        Features f;
        kernel_features(pooled, pair.doc.num_tokens(), head.log_base, head.epsilon, f.log_features, f.len_features);
        return f;
    }

    std::vector<double> parameters() const {
        std::vector<double> p = head.w1;
        p.insert(p.end(), head.w2.begin(), head.w2.end());
        p.push_back(head.head_alpha);
        p.push_back(head.head_beta);
        return p;
    }

    void set_parameters(std::span<const double> p) {
        const std::size_t k = head.w1.size();
        std::copy(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(k), head.w1.begin());
        std::copy(p.begin() + static_cast<std::ptrdiff_t>(k), p.begin() + static_cast<std::ptrdiff_t>(2 * k),
                  head.w2.begin());
        head.head_alpha = p[2 * k];
        head.head_beta = p[2 * k + 1];
    }

    std::vector<bool> decay_mask() const { return std::vector<bool>(2 * head.w1.size() + 2, true); }

    double logit(const Features& f) const {
        double s_log = 0.0, s_len = 0.0;
        for (std::size_t k = 0; k < head.w1.size(); ++k) {
            s_log += f.log_features[k] * head.w1[k];
            s_len += f.len_features[k] * head.w2[k];
        }
        return s_log * head.head_alpha + s_len * head.head_beta;
    }

    void logit_gradient(const Features& f, std::span<double> out) const {
        const std::size_t k = head.w1.size();
        double s_log = 0.0, s_len = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            out[i] = head.head_alpha * f.log_features[i];
            out[k + i] = head.head_beta * f.len_features[i];
            s_log += f.log_features[i] * head.w1[i];
            s_len += f.len_features[i] * head.w2[i];
        }
        out[2 * k] = s_log;
        out[2 * k + 1] = s_len;
    }
};

struct RegressionModel {
    using Features = std::vector<double>;
    RegressionHead head;

    Features featurize(const LabeledPair& pair) const { return pooled_features(pair.joint, head.variant); }

    std::vector<double> parameters() const {
        std::vector<double> p = head.weights;
        p.push_back(head.bias);
        return p;
    }

    void set_parameters(std::span<const double> p) {
        std::copy(p.begin(), p.end() - 1, head.weights.begin());
        head.bias = p.back();
    }

    std::vector<bool> decay_mask() const {
        std::vector<bool> mask(head.weights.size() + 1, true);
        mask.back() = false;  // bias
        return mask;
    }

    double logit(const Features& f) const { return regression_logit(f, head); }

    void logit_gradient(const Features& f, std::span<double> out) const {
        std::copy(f.begin(), f.end(), out.begin());
        out[f.size()] = 1.0;
    }
};

template <typename Model>
struct Example {
    typename Model::Features features;
    int label = 0;
};

template <typename Model>
std::vector<Example<Model>> featurize_all(const Model& model, const std::vector<LabeledPair>& pairs) {
    std::vector<Example<Model>> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.label != 0 && p.label != 1) throw Error("labels must be 0 or 1");
        out.push_back({model.featurize(p), p.label});
    }
    return out;
}

template <typename Model>
double mean_loss(const Model& model, const std::vector<Example<Model>>& data, LossKind kind) {
    if (data.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& ex : data) sum += loss_value(kind, model.logit(ex.features), ex.label);
    return sum / static_cast<double>(data.size());
}

template <typename Model>
double accuracy(const Model& model, const std::vector<Example<Model>>& data) {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& ex : data) hits += ((model.logit(ex.features) > 0.0 ? 1 : 0) == ex.label);
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

/// Analytic d(loss)/d(parameters) for one example.
template <typename Model>
std::vector<double> loss_gradient(const Model& model, const typename Model::Features& f, int label, LossKind kind) {
    std::vector<double> g(model.parameters().size());
    model.logit_gradient(f, g);
    const double slope = loss_slope(kind, model.logit(f), label);
    for (auto& x : g) x *= slope;
    return g;
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, 1e-6) over all
/// parameters, with central differences of step h. The 1e-6 floor keeps
/// vanishing gradients from dividing round-off by zero.
template <typename Model>
double grad_check(const Model& model, const typename Model::Features& f, int label, LossKind kind,
                  double h = 1e-5, std::vector<double>* numeric_out = nullptr) {
    const auto analytic = loss_gradient(model, f, label, kind);
    auto params = model.parameters();
    Model probe = model;
    double worst = 0.0;
    if (numeric_out) numeric_out->assign(params.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double orig = params[i];
        params[i] = orig + h;
        probe.set_parameters(params);
        const double up = loss_value(kind, probe.logit(f), label);
        params[i] = orig - h;
        probe.set_parameters(params);
        const double down = loss_value(kind, probe.logit(f), label);
        params[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        if (numeric_out) (*numeric_out)[i] = numeric;
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-6});
        worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
    }
    return worst;
}

template <typename Model>
struct TrainResult {
    Model model;
    std::vector<double> loss_history;        // full training-set loss: [0] before training, then per epoch
    std::vector<double> validation_history;  // per epoch
    std::size_t steps = 0;
    std::size_t epochs = 0;
    bool early_stopped = false;
};

namespace detail {

// Fisher-Yates driven by splitmix64 so the order is identical on every platform.
inline void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t& state) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(splitmix64(state) % i);
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace detail

/// Mini-batch Adam with decoupled weight decay (beta1 0.9, beta2 0.999,
/// eps 1e-8). Validation loss (training loss when no validation set is
/// given) is checked after each epoch; training stops after `patience`
/// epochs without improvement and the best parameters are kept.
template <typename Model>
TrainResult<Model> fit(Model model, const std::vector<Example<Model>>& train, const TrainConfig& cfg,
                       const std::vector<Example<Model>>& validation = {}) {
    cfg.validate();
    bool has_pos = false, has_neg = false;
    for (const auto& ex : train) (ex.label ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw Error("training data needs at least one positive and one negative pair");

    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    auto params = model.parameters();
    const auto mask = model.decay_mask();
    std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad(params.size());
    std::vector<double> g(params.size());

    const auto& val = validation.empty() ? train : validation;
    TrainResult<Model> result{model, {mean_loss(model, train, cfg.loss)}, {}, 0, 0, false};
    double best_val = mean_loss(model, val, cfg.loss);
    Model best = model;
    std::size_t bad_epochs = 0;

    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::uint64_t rng = cfg.seed;
    double pow1 = 1.0, pow2 = 1.0;

    bool out_of_steps = false;
    for (std::size_t epoch = 0; epoch < cfg.max_epochs && !out_of_steps; ++epoch) {
        detail::shuffle_indices(order, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            if (cfg.max_steps && result.steps >= cfg.max_steps) {
                out_of_steps = true;
                break;
            }
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                const auto& ex = train[order[i]];
                model.logit_gradient(ex.features, g);
                const double slope = loss_slope(cfg.loss, model.logit(ex.features), ex.label);
                for (std::size_t p = 0; p < grad.size(); ++p) grad[p] += slope * g[p];
            }
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            pow1 *= beta1;
            pow2 *= beta2;
            for (std::size_t p = 0; p < params.size(); ++p) {
                const double gp = grad[p] * inv_batch;
                m[p] = beta1 * m[p] + (1.0 - beta1) * gp;
                v[p] = beta2 * v[p] + (1.0 - beta2) * gp * gp;
                const double m_hat = m[p] / (1.0 - pow1);
                const double v_hat = v[p] / (1.0 - pow2);
                const double decay = mask[p] ? cfg.weight_decay * params[p] : 0.0;
                params[p] -= cfg.learning_rate * (m_hat / (std::sqrt(v_hat) + adam_eps) + decay);
            }
            model.set_parameters(params);
            ++result.steps;
        }
        ++result.epochs;
        result.loss_history.push_back(mean_loss(model, train, cfg.loss));
        const double val_loss = mean_loss(model, val, cfg.loss);
        result.validation_history.push_back(val_loss);
        if (val_loss < best_val) {
            best_val = val_loss;
            best = model;
            bad_epochs = 0;
        } else if (++bad_epochs >= cfg.patience) {
            result.early_stopped = true;
            break;
        }
    }
    result.model = best;
    return result;
}

/// Trains the kernel-pooling head on labeled (query, doc) embedding pairs.
inline TrainResult<SimModel> train_sim_head(const std::vector<LabeledPair>& pairs, const KernelBank& bank,
                                            const ScoringHead& init, const TrainConfig& cfg,
                                            const std::vector<LabeledPair>& validation = {}) {
    SimModel model{bank, init};
    bank.validate();
    init.validate(bank.size());
    return fit(model, featurize_all(model, pairs), cfg, featurize_all(model, validation));
}

/// Trains the regression head on labeled joint-sequence embeddings.
inline TrainResult<RegressionModel> train_regression_head(const std::vector<LabeledPair>& pairs,
                                                          const RegressionHead& init, const TrainConfig& cfg,
                                                          const std::vector<LabeledPair>& validation = {}) {
    RegressionModel model{init};
    return fit(model, featurize_all(model, pairs), cfg, featurize_all(model, validation));
}

}  // namespace podrank
