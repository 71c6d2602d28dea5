// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <random>

#include "podrank/fusion.hpp"

using namespace podrank;
using Catch::Approx;

TEST_CASE("fuse values", "[fusion]") {
    CHECK(fuse(0.8, 0.0, {1.0}) == 0.4);
    CHECK(fuse(0.8, 0.0) == 0.4);
    for (double x : {0.0, 0.123, 0.5, 0.999, 1.0}) {
        for (double lex : {0.0, 0.7, 12.0, 1e9}) CHECK(fuse(x, lex, {0.0}) == x);
    }
    CHECK(fuse(0.3, 1e6, {2.0}) == Approx((0.3 + 2.0) / 3.0).epsilon(1e-15));
    CHECK(fuse(0.5, 1.0, {1.0}) == Approx((0.5 + 2 * (1 / (1 + std::exp(-1.0)) - 0.5)) / 2).epsilon(1e-15));

    CHECK_THROWS_AS(fuse(0.5, -0.1), Error);
    CHECK_THROWS_AS(fuse(0.5, 1.0, {-1.0}), ConfigError);
}

TEST_CASE("fuse properties", "[fusion]") {
    std::mt19937_64 rng(83);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const double x = u(rng), lex = 30 * u(rng), alpha = trial % 10 == 0 ? 0.0 : 10 * u(rng);
        const double f = fuse(x, lex, {alpha});
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        const double dx = 1e-3 * (1 + u(rng));
        CHECK(fuse(x + dx, lex, {alpha}) > f);
        if (alpha > 0) CHECK(fuse(x, lex + 0.01 + u(rng), {alpha}) > f);
        CHECK(2 * (sigmoid(lex) - 0.5) >= 0.0);
        CHECK(2 * (sigmoid(lex) - 0.5) < 1.0);
    }
}

TEST_CASE("fuse_ranked", "[fusion]") {
    auto lex = RankedList::from_unsorted({{"a", 0.1}, {"b", 2.0}, {"c", 0.5}, {"d", 1.0}});
    auto neural = RankedList::from_unsorted({{"a", 0.9}, {"b", 0.2}, {"c", 0.6}, {"d", 0.55}});

    auto same = fuse_ranked(neural, lex, {0.0});
    for (std::size_t i = 0; i < neural.size(); ++i) CHECK(same[i] == neural[i]);

    auto single = fuse_ranked(RankedList::from_unsorted({{"c", 0.6}}), lex);
    REQUIRE(single.size() == 1);
    CHECK(single[0].score == fuse(0.6, 0.5));

    // Hand values at alpha 1: (x + 2 sigmoid(lex) - 1) / 2
    //   a: (0.9 + 0.049958) / 2 = 0.474979
    //   b: (0.2 + 0.761594) / 2 = 0.480797
    //   c: (0.6 + 0.244919) / 2 = 0.422459
    //   d: (0.55 + 0.462117) / 2 = 0.506059
    auto fused = fuse_ranked(neural, lex);
    const std::vector<std::pair<std::string, double>> want = {
        {"d", 0.506059}, {"b", 0.480797}, {"a", 0.474979}, {"c", 0.422459}};
    REQUIRE(fused.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(fused[i].doc_id == want[i].first);
        CHECK(fused[i].score == Approx(want[i].second).margin(1e-6));
    }

    auto lexical_only = fuse_ranked(neural, lex, {1e6});
    const std::vector<std::string> by_lex = {"b", "d", "c", "a"};
    for (std::size_t i = 0; i < 4; ++i) CHECK(lexical_only[i].doc_id == by_lex[i]);

    auto partial = RankedList::from_unsorted({{"a", 0.1}});
    CHECK_THROWS_AS(fuse_ranked(neural, partial), Error);
}
