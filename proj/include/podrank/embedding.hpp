// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "podrank/binary_io.hpp"
#include "podrank/error.hpp"
#include "podrank/text.hpp"

namespace podrank {

/// Per-token vectors for every stored layer, laid out [layer][token][dim].
/// Layer layers-1 is the last (top) layer.
struct TokenEmbeddings {
    std::vector<std::string> tokens;
    std::size_t layers = 1;
    std::size_t dim = 1;
    std::vector<float> values;

    std::size_t num_tokens() const noexcept { return tokens.size(); }

    std::span<const float> vec(std::size_t layer, std::size_t token) const {
        return {values.data() + (layer * tokens.size() + token) * dim, dim};
    }
    std::span<float> vec(std::size_t layer, std::size_t token) {
        return {values.data() + (layer * tokens.size() + token) * dim, dim};
    }

    void validate() const {
        if (layers < 1 || dim < 1) throw Error("embeddings need layers >= 1 and dim >= 1");
        if (values.size() != layers * tokens.size() * dim) throw Error("embedding tensor shape mismatch");
        for (float v : values) {
            if (!std::isfinite(v)) throw Error("non-finite embedding value");
        }
    }

    bool operator==(const TokenEmbeddings&) const = default;
};

inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// splitmix64: advances `state` and returns the next output.
inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Deterministic stand-in encoder. Each (token, layer) seeds a splitmix64
/// stream from FNV-1a(token) ^ seed ^ layer; the first `dim` draws mapped to
/// [-1, 1] form the vector, which is then scaled to unit length.
inline TokenEmbeddings hash_embed(const std::vector<std::string>& tokens, std::size_t dim, std::size_t layers,
                                  std::uint64_t seed) {
    if (dim < 1 || layers < 1) throw ConfigError("embedding", "dim and layers must be >= 1");
    TokenEmbeddings emb;
    emb.tokens = tokens;
    emb.layers = layers;
    emb.dim = dim;
    emb.values.resize(layers * tokens.size() * dim);
    std::vector<double> buf(dim);
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t t = 0; t < tokens.size(); ++t) {
            std::uint64_t state = fnv1a64(tokens[t]) ^ seed ^ static_cast<std::uint64_t>(l);
            double norm2 = 0.0;
            for (auto& x : buf) {
                const double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
                x = 2.0 * u - 1.0;
                norm2 += x * x;
            }
            const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
            auto out = emb.vec(l, t);
            for (std::size_t j = 0; j < dim; ++j) out[j] = static_cast<float>(buf[j] * inv);
        }
    }
    return emb;
}

/// Keyed embedding records sharing one (layers, dim) shape.
struct EmbeddingFile {
    std::size_t layers = 1;
    std::size_t dim = 1;
    std::map<std::string, TokenEmbeddings> records;

    bool operator==(const EmbeddingFile&) const = default;
};

inline constexpr char kEmbeddingMagic[4] = {'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

/// EMB1: "EMB1" | u32 version | u32 L | u32 d | u64 count | records sorted
/// by key, each: key, u32 T, T tokens, L*T*d float32 in [layer][token][dim]
/// order. Strings are a u32 byte length followed by UTF-8; all little-endian.
inline io::ByteWriter encode_embeddings(const EmbeddingFile& file) {
    if (file.layers < 1 || file.dim < 1) throw Error("embedding file needs layers >= 1 and dim >= 1");
    io::ByteWriter out;
    out.put_bytes({kEmbeddingMagic, 4});
    out.put(kEmbeddingVersion);
    out.put(static_cast<std::uint32_t>(file.layers));
    out.put(static_cast<std::uint32_t>(file.dim));
    out.put(static_cast<std::uint64_t>(file.records.size()));
    for (const auto& [key, emb] : file.records) {
        if (emb.layers != file.layers || emb.dim != file.dim) {
            throw Error("record '" + key + "' does not match the file's (layers, dim)");
        }
        emb.validate();
        out.put_string<std::uint32_t>(key);
        out.put(static_cast<std::uint32_t>(emb.tokens.size()));
        for (const auto& tok : emb.tokens) out.put_string<std::uint32_t>(tok);
        for (float v : emb.values) out.put(v);
    }
    return out;
}

inline void write_embedding_file(const std::string& path, const EmbeddingFile& file) {
    encode_embeddings(file).save(path);
}

inline EmbeddingFile decode_embeddings(io::ByteReader& in) {
    if (in.get_bytes(4) != std::string(kEmbeddingMagic, 4)) throw FormatError("bad magic", 0);
    auto version = in.get<std::uint32_t>();
    if (version != kEmbeddingVersion) throw FormatError("unsupported version " + std::to_string(version), 4);
    EmbeddingFile file;
    file.layers = in.get<std::uint32_t>();
    file.dim = in.get<std::uint32_t>();
    if (file.layers < 1 || file.dim < 1) throw FormatError("layers and dim must be >= 1", 8);
    auto count = in.get<std::uint64_t>();
    std::string prev;
    for (std::uint64_t r = 0; r < count; ++r) {
        const auto record_offset = in.offset();
        auto key = in.get_string<std::uint32_t>();
        if (r > 0 && !(prev < key)) throw FormatError("record keys not strictly ascending", record_offset);
        prev = key;
        TokenEmbeddings emb;
        emb.layers = file.layers;
        emb.dim = file.dim;
        auto num_tokens = in.get<std::uint32_t>();
        for (std::uint32_t t = 0; t < num_tokens; ++t) emb.tokens.push_back(in.get_string<std::uint32_t>());
        const std::size_t n = file.layers * emb.tokens.size() * file.dim;
        if (n > in.remaining() / 4) throw FormatError("truncated tensor for '" + key + "'", in.offset());
        emb.values.resize(n);
        for (auto& v : emb.values) {
            const auto at = in.offset();
            v = in.get<float>();
            if (!std::isfinite(v)) throw FormatError("non-finite value in '" + key + "'", at);
        }
        file.records.emplace(std::move(key), std::move(emb));
    }
    if (!in.at_end()) throw FormatError("trailing bytes", in.offset());
    return file;
}

inline EmbeddingFile read_embedding_file(const std::string& path) {
    auto in = io::ByteReader::from_file(path);
    return decode_embeddings(in);
}

/// Source of token embeddings for queries and segments.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    /// Throws NotFoundError for unknown keys.
    virtual TokenEmbeddings lookup(const std::string& key) const = 0;
    virtual std::size_t layers() const = 0;
    virtual std::size_t dim() const = 0;
};

class FileProvider final : public EmbeddingProvider {
public:
    explicit FileProvider(EmbeddingFile file) : file_(std::move(file)) {}

    static FileProvider open(const std::string& path) { return FileProvider(read_embedding_file(path)); }

    TokenEmbeddings lookup(const std::string& key) const override {
        auto it = file_.records.find(key);
        if (it == file_.records.end()) throw NotFoundError(key);
        return it->second;
    }
    std::size_t layers() const override { return file_.layers; }
    std::size_t dim() const override { return file_.dim; }
    const EmbeddingFile& file() const noexcept { return file_; }

private:
    EmbeddingFile file_;
};

struct HashEmbeddingConfig {
    std::size_t dim = 64;
    std::size_t layers = 2;
    std::uint64_t seed = 42;
};

/// Synthesizes hash embeddings on demand for registered texts.
class HashProvider final : public EmbeddingProvider {
public:
    explicit HashProvider(HashEmbeddingConfig cfg = {}, Tokenizer tokenizer = {})
        : cfg_(cfg), tokenizer_(std::move(tokenizer)) {}

    void add_text(const std::string& key, std::string_view text) { tokens_[key] = tokenizer_(text); }
    void add_tokens(const std::string& key, std::vector<std::string> tokens) { tokens_[key] = std::move(tokens); }
    bool contains(const std::string& key) const { return tokens_.contains(key); }

    TokenEmbeddings lookup(const std::string& key) const override {
        auto it = tokens_.find(key);
        if (it == tokens_.end()) throw NotFoundError(key);
        return hash_embed(it->second, cfg_.dim, cfg_.layers, cfg_.seed);
    }
    std::size_t layers() const override { return cfg_.layers; }
    std::size_t dim() const override { return cfg_.dim; }

    /// Materializes every registered key into an EMB1-ready record set.
    EmbeddingFile export_all() const {
        EmbeddingFile file{cfg_.layers, cfg_.dim, {}};
        for (const auto& [key, _] : tokens_) file.records.emplace(key, lookup(key));
        return file;
    }

private:
    HashEmbeddingConfig cfg_;
    Tokenizer tokenizer_;
    std::map<std::string, std::vector<std::string>> tokens_;
};

}  // namespace podrank
