// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cstring>
#include <random>

#include "podrank/rerank/synthetic.hpp"
#include "podrank/rerank/train.hpp"

using namespace podrank;
using Catch::Approx;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

SimModel random_sim_model(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SimModel m{KernelBank::standard(), ScoringHead::zeros(11)};
    for (auto& w : m.head.w1) w = 0.1 * u(rng);
    for (auto& w : m.head.w2) w = u(rng);
    m.head.head_alpha = u(rng);
    m.head.head_beta = u(rng);
    return m;
}

RegressionModel random_reg_model(std::mt19937_64& rng, RegressionVariant v, std::size_t dim) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RegressionModel m{RegressionHead::zeros(v, dim)};
    for (auto& w : m.head.weights) w = u(rng);
    m.head.bias = u(rng);
    return m;
}

}  // namespace

TEST_CASE("losses on the logit", "[train]") {
    CHECK(loss_value(LossKind::cross_entropy, 0.0, 1) == Approx(std::log(2.0)));
    CHECK(loss_value(LossKind::cross_entropy, 2.0, 0) == Approx(-std::log(1 - 1 / (1 + std::exp(-2.0)))));
    CHECK(loss_value(LossKind::cross_entropy, -800.0, 1) == Approx(800.0));
    CHECK(std::isfinite(loss_value(LossKind::cross_entropy, 800.0, 0)));
    CHECK(loss_value(LossKind::hinge, 0.5, 1) == 0.5);
    CHECK(loss_value(LossKind::hinge, 0.5, 0) == 1.5);
    CHECK(loss_value(LossKind::hinge, 3.0, 1) == 0.0);
    CHECK(loss_slope(LossKind::cross_entropy, 0.0, 1) == -0.5);
    CHECK(loss_slope(LossKind::hinge, 3.0, 1) == 0.0);
    CHECK(loss_slope(LossKind::hinge, 0.0, 0) == 1.0);
}

TEST_CASE("analytic gradients match finite differences", "[train]") {
    std::mt19937_64 rng(71);
    auto pairs = synthetic_pairs(40, {16, 2, 3}, 3);
    for (auto kind : {LossKind::cross_entropy, LossKind::hinge}) {
        for (const auto& pair : pairs) {
            auto sim = random_sim_model(rng);
            auto f = sim.featurize(pair);
            if (kind == LossKind::hinge && std::fabs(1 - (pair.label ? 1 : -1) * sim.logit(f)) < 1e-3) continue;
            CHECK(grad_check(sim, f, pair.label, kind) < 1e-4);

            for (auto v : {RegressionVariant::last_layer, RegressionVariant::concat_last_two}) {
                auto reg = random_reg_model(rng, v, 16);
                auto rf = reg.featurize(pair);
                if (kind == LossKind::hinge && std::fabs(1 - (pair.label ? 1 : -1) * reg.logit(rf)) < 1e-3) continue;
                CHECK(grad_check(reg, rf, pair.label, kind) < 1e-4);
            }
        }
    }
}

TEST_CASE("gradient vanishes at a symmetric point", "[train]") {
    // All-zero head: every partial derivative has a zero factor.
    auto pairs = synthetic_pairs(2, {8, 1, 1}, 1);
    SimModel sim{KernelBank::standard(), ScoringHead::zeros(11)};
    sim.head.head_alpha = 0.0;
    sim.head.head_beta = 0.0;
    auto f = sim.featurize(pairs[0]);
    for (double x : loss_gradient(sim, f, 1, LossKind::cross_entropy)) CHECK(std::fabs(x) < 1e-6);
    std::vector<double> numeric;
    grad_check(sim, f, 1, LossKind::cross_entropy, 1e-5, &numeric);
    for (double x : numeric) CHECK(std::fabs(x) < 1e-6);
}

TEST_CASE("finite differences touch only their own slot", "[train]") {
    auto pairs = synthetic_pairs(2, {8, 2, 1}, 1);
    std::mt19937_64 rng(73);
    for (int trial = 0; trial < 5; ++trial) {
        auto sim = random_sim_model(rng);
        auto f = sim.featurize(pairs[trial % 2]);
        const auto base = sim.parameters();
        std::vector<double> numeric;
        grad_check(sim, f, 1, LossKind::cross_entropy, 1e-5, &numeric);
        const auto analytic = loss_gradient(sim, f, 1, LossKind::cross_entropy);
        for (std::size_t i = 0; i < base.size(); ++i) {
            auto p = base;
            p[i] += 1e-3;
            SimModel probe = sim;
            probe.set_parameters(p);
            auto after = probe.parameters();
            for (std::size_t j = 0; j < base.size(); ++j) {
                if (j != i) CHECK(after[j] == base[j]);
            }
            // A parameter with no effect on the loss has a zero slot, and vice versa.
            const bool moves = loss_value(LossKind::cross_entropy, probe.logit(f), 1) !=
                               loss_value(LossKind::cross_entropy, sim.logit(f), 1);
            CHECK(moves == (analytic[i] != 0.0));
            CHECK(numeric[i] == Approx(analytic[i]).epsilon(1e-4).margin(1e-8));
        }
    }
}

TEST_CASE("training separates synthetic pairs", "[train]") {
    auto pairs = synthetic_pairs(200, {64, 2, 42}, 42);
    TrainConfig cfg;
    cfg.max_epochs = 1000;
    cfg.max_steps = 200;
    cfg.patience = 1000;
    cfg.learning_rate = 0.03;

    SECTION("similarity head") {
        auto init = ScoringHead::zeros(11);
        auto r = train_sim_head(pairs, KernelBank::standard(), init, cfg);
        SimModel m = r.model;
        auto data = featurize_all(m, pairs);
        CHECK(accuracy(m, data) >= 0.95);
        CHECK(r.steps == 200);
        CHECK(r.loss_history.back() < r.loss_history.front());
    }
    SECTION("regression heads") {
        for (auto v : {RegressionVariant::last_layer, RegressionVariant::concat_last_two}) {
            auto r = train_regression_head(pairs, RegressionHead::zeros(v, 64), cfg);
            auto data = featurize_all(r.model, pairs);
            CHECK(accuracy(r.model, data) >= 0.95);
            CHECK(r.loss_history.back() < r.loss_history.front());
        }
    }
}

TEST_CASE("training is bit reproducible", "[train]") {
    auto pairs = synthetic_pairs(60, {16, 2, 7}, 7);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 4;
    auto a = train_sim_head(pairs, KernelBank::standard(), ScoringHead::zeros(11), cfg);
    auto b = train_sim_head(pairs, KernelBank::standard(), ScoringHead::zeros(11), cfg);
    CHECK(same_bits(a.model.parameters(), b.model.parameters()));
    CHECK(same_bits(a.loss_history, b.loss_history));

    auto c = train_regression_head(pairs, RegressionHead::zeros(RegressionVariant::last_layer, 16), cfg);
    auto d = train_regression_head(pairs, RegressionHead::zeros(RegressionVariant::last_layer, 16), cfg);
    CHECK(same_bits(c.model.parameters(), d.model.parameters()));

    cfg.seed = 8;
    auto e = train_regression_head(pairs, RegressionHead::zeros(RegressionVariant::last_layer, 16), cfg);
    CHECK(!same_bits(c.model.parameters(), e.model.parameters()));
}

TEST_CASE("zero learning rate leaves parameters unchanged", "[train]") {
    auto pairs = synthetic_pairs(20, {8, 2, 1}, 1);
    std::mt19937_64 rng(79);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.weight_decay = 0.0;
    auto sim = random_sim_model(rng);
    auto r = train_sim_head(pairs, sim.bank, sim.head, cfg);
    CHECK(same_bits(r.model.parameters(), sim.parameters()));

    auto reg = random_reg_model(rng, RegressionVariant::last_layer, 8);
    auto rr = train_regression_head(pairs, reg.head, cfg);
    CHECK(same_bits(rr.model.parameters(), reg.parameters()));
}

TEST_CASE("early stopping and configuration errors", "[train]") {
    auto pairs = synthetic_pairs(20, {8, 2, 1}, 1);
    TrainConfig cfg;
    cfg.learning_rate = 0.0;
    cfg.max_epochs = 50;
    cfg.patience = 2;
    auto r = train_regression_head(pairs, RegressionHead::zeros(RegressionVariant::last_layer, 8), cfg);
    CHECK(r.early_stopped);
    CHECK(r.epochs == 2);
    CHECK(r.validation_history.size() == 2);
    CHECK(r.loss_history.size() == 3);

    std::vector<LabeledPair> positives;
    for (const auto& p : pairs) {
        if (p.label == 1) positives.push_back(p);
    }
    CHECK_THROWS_AS(train_regression_head(positives, RegressionHead::zeros(RegressionVariant::last_layer, 8), {}),
                    Error);

    TrainConfig bad;
    bad.learning_rate = -1;
    CHECK_THROWS_AS(train_regression_head(pairs, RegressionHead::zeros(RegressionVariant::last_layer, 8), bad),
                    ConfigError);

    auto bad_label = pairs;
    bad_label[0].label = 2;
    CHECK_THROWS_AS(train_regression_head(bad_label, RegressionHead::zeros(RegressionVariant::last_layer, 8), {}),
                    Error);
}

TEST_CASE("validation set drives early stopping", "[train]") {
    auto train = synthetic_pairs(40, {16, 2, 2}, 2);
    auto val = synthetic_pairs(20, {16, 2, 2}, 99);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.max_epochs = 40;
    auto r = train_regression_head(train, RegressionHead::zeros(RegressionVariant::last_layer, 16), cfg, val);
    CHECK(r.validation_history.size() == r.epochs);
    RegressionModel m = r.model;
    const double kept = mean_loss(m, featurize_all(m, val), cfg.loss);
    CHECK(kept == *std::min_element(r.validation_history.begin(), r.validation_history.end()));
}
