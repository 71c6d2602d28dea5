// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "podrank/error.hpp"
#include "podrank/rerank/regression.hpp"
#include "podrank/rerank/similarity.hpp"

namespace podrank {

enum class ScorerVariant { reg, reg_concat, sim };

inline const char* variant_name(ScorerVariant v) {
    switch (v) {
        case ScorerVariant::reg: return "reg";
        case ScorerVariant::reg_concat: return "reg-concat";
        case ScorerVariant::sim: return "sim";
    }
    return "?";
}

inline ScorerVariant parse_variant(const std::string& name) {
    if (name == "reg") return ScorerVariant::reg;
    if (name == "reg-concat") return ScorerVariant::reg_concat;
    if (name == "sim") return ScorerVariant::sim;
    throw ConfigError("variant", "expected reg, reg-concat or sim, got '" + name + "'");
}

inline RegressionVariant regression_variant(ScorerVariant v) {
    return v == ScorerVariant::reg_concat ? RegressionVariant::concat_last_two : RegressionVariant::last_layer;
}

/// Parameters of either scorer, as persisted on disk.
struct HeadParams {
    ScorerVariant variant = ScorerVariant::sim;
    KernelBank bank = KernelBank::standard();
    ScoringHead sim;
    RegressionHead reg;

    bool operator==(const HeadParams&) const = default;
};

inline constexpr const char* kHeadHeader = "podrank-head 1";

namespace detail {

inline std::string format_reals(const std::vector<double>& xs) {
    std::string out;
    char buf[40];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
        if (i) out.push_back(' ');
        out += buf;
    }
    return out;
}

inline std::vector<double> parse_reals(const std::string& key, const std::string& text, std::size_t lineno) {
    std::vector<double> xs;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double x;
        try {
            x = std::stod(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw ParseError("'" + key + "' has non-numeric value '" + tok + "'", lineno);
        xs.push_back(x);
    }
    return xs;
}

}  // namespace detail

/// Plain-text head file: a version line, then `key = v1 v2 ...` lines with
/// 17 significant digits so every double round-trips exactly.
inline std::string format_head(const HeadParams& p) {
    std::ostringstream out;
    out << kHeadHeader << '\n';
    out << "variant = " << variant_name(p.variant) << '\n';
    using detail::format_reals;
    if (p.variant == ScorerVariant::sim) {
        out << "mus = " << format_reals(p.bank.mus) << '\n';
        out << "sigmas = " << format_reals(p.bank.sigmas) << '\n';
        out << "w1 = " << format_reals(p.sim.w1) << '\n';
        out << "w2 = " << format_reals(p.sim.w2) << '\n';
        out << "head_alpha = " << format_reals({p.sim.head_alpha}) << '\n';
        out << "head_beta = " << format_reals({p.sim.head_beta}) << '\n';
        out << "log_base = " << format_reals({p.sim.log_base}) << '\n';
        out << "epsilon = " << format_reals({p.sim.epsilon}) << '\n';
    } else {
        out << "weights = " << format_reals(p.reg.weights) << '\n';
        out << "bias = " << format_reals({p.reg.bias}) << '\n';
    }
    return out.str();
}

inline HeadParams parse_head(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != kHeadHeader) throw ParseError("expected header '" + std::string(kHeadHeader) + "'", 1);
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("expected 'key = values'", lineno);
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        auto key = trim(line.substr(0, eq));
        if (kv.contains(key)) throw ParseError("repeated key '" + key + "'", lineno);
        kv[key] = {trim(line.substr(eq + 1)), lineno};
    }
    auto take = [&](const std::string& key) -> std::pair<std::string, std::size_t> {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError("missing key '" + key + "'", lineno);
        auto v = it->second;
        kv.erase(it);
        return v;
    };
    auto reals = [&](const std::string& key) {
        auto [v, ln] = take(key);
        return detail::parse_reals(key, v, ln);
    };
    auto scalar = [&](const std::string& key) {
        auto [v, ln] = take(key);
        auto xs = detail::parse_reals(key, v, ln);
        if (xs.size() != 1) throw ParseError("'" + key + "' must hold one value", ln);
        return xs[0];
    };

    HeadParams p;
    p.variant = parse_variant(take("variant").first);
    if (p.variant == ScorerVariant::sim) {
        p.bank.mus = reals("mus");
        p.bank.sigmas = reals("sigmas");
        p.sim.w1 = reals("w1");
        p.sim.w2 = reals("w2");
        p.sim.head_alpha = scalar("head_alpha");
        p.sim.head_beta = scalar("head_beta");
        p.sim.log_base = scalar("log_base");
        p.sim.epsilon = scalar("epsilon");
        p.bank.validate();
        p.sim.validate(p.bank.size());
    } else {
        p.reg.variant = regression_variant(p.variant);
        p.reg.weights = reals("weights");
        p.reg.bias = scalar("bias");
    }
    if (!kv.empty()) throw ParseError("unknown key '" + kv.begin()->first + "'", kv.begin()->second.second);
    return p;
}

inline void write_head(const std::string& path, const HeadParams& p) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << format_head(p);
    if (!out) throw Error("write failed for '" + path + "'");
}

inline HeadParams read_head(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_head(buf.str());
}

}  // namespace podrank
