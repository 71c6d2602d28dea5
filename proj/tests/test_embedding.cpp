// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "podrank/embedding.hpp"

using namespace podrank;
using Catch::Approx;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("podrank_" + name)).string();
}

std::vector<char> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
    return s;
}

EmbeddingFile sample_file() {
    EmbeddingFile f{2, 8, {}};
    f.records.emplace("q1", hash_embed({"coffee", "beans"}, 8, 2, 1));
    f.records.emplace("seg_0", hash_embed({"roast", "the", "caf\xc3\xa9"}, 8, 2, 1));
    f.records.emplace("empty", hash_embed({}, 8, 2, 1));
    return f;
}

}  // namespace

TEST_CASE("hash primitives follow their reference vectors", "[embedding]") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
    std::uint64_t state = 0;
    CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("hash_embed shape, determinism and normalization", "[embedding]") {
    auto e = hash_embed({"a", "b", "a"}, 16, 3, 42);
    REQUIRE_NOTHROW(e.validate());
    CHECK(e.layers == 3);
    CHECK(e.num_tokens() == 3);
    CHECK(e.values.size() == 3 * 3 * 16);
    for (std::size_t l = 0; l < 3; ++l) {
        CHECK(std::memcmp(e.vec(l, 0).data(), e.vec(l, 2).data(), 16 * sizeof(float)) == 0);
        for (std::size_t t = 0; t < 3; ++t) {
            CHECK(std::sqrt(dot(e.vec(l, t), e.vec(l, t))) == Approx(1.0).margin(1e-6));
        }
    }
    CHECK(!std::equal(e.vec(0, 0).begin(), e.vec(0, 0).end(), e.vec(1, 0).begin()));
    CHECK(hash_embed({"a"}, 16, 1, 42).vec(0, 0)[0] == e.vec(0, 0)[0]);
    CHECK(hash_embed({"a"}, 16, 1, 43).vec(0, 0)[0] != e.vec(0, 0)[0]);
    CHECK(hash_embed({"a", "b", "a"}, 16, 3, 42) == e);
    CHECK_THROWS_AS(hash_embed({"a"}, 0, 1, 1), ConfigError);

    // First coordinate rebuilt by hand from the seeding rule.
    std::uint64_t state = fnv1a64("b") ^ 42ULL ^ 1ULL;
    std::vector<double> raw(16);
    double n2 = 0;
    for (auto& x : raw) {
        x = 2.0 * static_cast<double>(splitmix64(state) >> 11) / 9007199254740992.0 - 1.0;
        n2 += x * x;
    }
    CHECK(e.vec(1, 1)[0] == static_cast<float>(raw[0] / std::sqrt(n2)));
}

TEST_CASE("cosines between hash vectors stay in range", "[embedding]") {
    std::vector<std::string> toks;
    for (int i = 0; i < 60; ++i) toks.push_back("tok" + std::to_string(i));
    auto e = hash_embed(toks, 32, 1, 7);
    for (std::size_t i = 0; i < toks.size(); ++i) {
        for (std::size_t j = 0; j < toks.size(); ++j) {
            const double c = dot(e.vec(0, i), e.vec(0, j));
            CHECK(c >= -1 - 1e-6);
            CHECK(c <= 1 + 1e-6);
        }
    }
}

TEST_CASE("embedding file round-trip", "[embedding]") {
    auto f = sample_file();
    auto p1 = temp_path("a.emb"), p2 = temp_path("b.emb");
    write_embedding_file(p1, f);
    write_embedding_file(p2, f);
    CHECK(file_bytes(p1) == file_bytes(p2));

    auto back = read_embedding_file(p1);
    CHECK(back == f);
    REQUIRE(back.records.size() == 3);
    const auto& a = back.records.at("seg_0").values;
    const auto& b = f.records.at("seg_0").values;
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);

    EmbeddingFile empty{2, 4, {}};
    write_embedding_file(p2, empty);
    CHECK(file_bytes(p2).size() == 4 + 4 + 4 + 4 + 8);
    CHECK(read_embedding_file(p2) == empty);

    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("embedding file layout", "[embedding]") {
    EmbeddingFile f{1, 2, {}};
    TokenEmbeddings e;
    e.tokens = {"x"};
    e.layers = 1;
    e.dim = 2;
    e.values = {1.0f, -2.0f};
    f.records.emplace("k", e);
    auto b = encode_embeddings(f).bytes();
    const std::vector<unsigned char> want = {
        'E', 'M', 'B', '1', 1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0,  // magic, version, L, d
        1, 0, 0, 0, 0, 0, 0, 0,                                  // count
        1, 0, 0, 0, 'k',                                         // key
        1, 0, 0, 0,                                              // T
        1, 0, 0, 0, 'x',                                         // token
        0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0xc0};         // 1.0f, -2.0f
    REQUIRE(b.size() == want.size());
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(static_cast<unsigned char>(b[i]) == want[i]);
}

TEST_CASE("embedding file errors", "[embedding]") {
    auto bytes = encode_embeddings(sample_file()).bytes();
    SECTION("wrong magic") {
        auto b = bytes;
        b[3] = '2';
        io::ByteReader in(b);
        CHECK_THROWS_AS(decode_embeddings(in), FormatError);
    }
    SECTION("wrong version") {
        auto b = bytes;
        b[4] = 2;
        io::ByteReader in(b);
        CHECK_THROWS_AS(decode_embeddings(in), FormatError);
    }
    SECTION("truncated tensor") {
        io::ByteReader in(std::vector<char>(bytes.begin(), bytes.end() - 3));
        try {
            decode_embeddings(in);
            FAIL("expected format error");
        } catch (const FormatError& e) {
            CHECK(e.offset() > 0);
        }
    }
    SECTION("shape mismatch on write") {
        auto f = sample_file();
        f.records.emplace("odd", hash_embed({"a"}, 4, 2, 1));
        CHECK_THROWS_AS(encode_embeddings(f), Error);
    }
    SECTION("non-finite value") {
        auto f = sample_file();
        f.records.at("q1").values[0] = std::nanf("");
        CHECK_THROWS_AS(encode_embeddings(f), Error);
    }
}

TEST_CASE("providers", "[embedding]") {
    HashProvider hp({8, 2, 9});
    hp.add_text("q", "Hello, hello world");
    auto e = hp.lookup("q");
    CHECK(e.tokens == std::vector<std::string>{"hello", "hello", "world"});
    CHECK(e.layers == 2);
    CHECK(e.dim == 8);
    CHECK_THROWS_AS(hp.lookup("missing"), NotFoundError);

    auto fp = FileProvider(hp.export_all());
    CHECK(fp.lookup("q") == e);
    CHECK(fp.layers() == 2);
    CHECK_THROWS_AS(fp.lookup("missing"), NotFoundError);

    auto path = temp_path("prov.emb");
    write_embedding_file(path, hp.export_all());
    CHECK(FileProvider::open(path).lookup("q") == e);
    std::filesystem::remove(path);
}
