// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "podrank/error.hpp"

namespace podrank::io {

/// Little-endian byte sink. Everything is buffered in memory and flushed
/// with save(), so a failed write never leaves a half-built buffer behind.
class ByteWriter {
public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        auto bits = std::bit_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            buf_.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
        }
    }

    void put_bytes(std::string_view bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    template <typename Len = std::uint64_t>
    void put_string(std::string_view s) {
        put(static_cast<Len>(s.size()));
        put_bytes(s);
    }

    const std::vector<char>& bytes() const noexcept { return buf_; }
    std::size_t size() const noexcept { return buf_.size(); }

    void save(const std::string& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open '" + path + "' for writing");
        out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
        if (!out) throw Error("write failed for '" + path + "'");
    }

private:
    std::vector<char> buf_;
};

/// Bounds-checked little-endian reader. Every failure reports the offset.
class ByteReader {
public:
    explicit ByteReader(std::vector<char> data) : data_(std::move(data)) {}

    static ByteReader from_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open '" + path + "'");
        std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        return ByteReader(std::move(data));
    }

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get() {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        require(sizeof(U), "truncated integer");
        U bits = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) {
            bits |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(U);
        return std::bit_cast<T>(bits);
    }

    std::string get_bytes(std::size_t n) {
        require(n, "truncated byte string");
        std::string s(data_.data() + pos_, n);
        pos_ += n;
        return s;
    }

    template <typename Len = std::uint64_t>
    std::string get_string() {
        auto len = get<Len>();
        return get_bytes(static_cast<std::size_t>(len));
    }

    /// Throws unless at least n more bytes are available.
    void require(std::size_t n, const char* what) const {
        if (n > data_.size() - pos_) throw FormatError(what, pos_);
    }

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    bool at_end() const noexcept { return pos_ == data_.size(); }

private:
    std::vector<char> data_;
    std::size_t pos_ = 0;
};

}  // namespace podrank::io
