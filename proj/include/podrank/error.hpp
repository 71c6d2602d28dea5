// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace podrank {

/// Base class for every data-level failure raised by the library.
/// The CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed textual input (corpus lines, run files, qrels, configs).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Malformed binary input; carries the byte offset where decoding failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : Error("offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class DuplicateError : public Error {
public:
    explicit DuplicateError(const std::string& key)
        : Error("duplicate id '" + key + "'"), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class NotFoundError : public Error {
public:
    explicit NotFoundError(const std::string& key)
        : Error("unknown id '" + key + "'"), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Bad configuration value or key. The CLI maps these to exit code 1.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(key) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace podrank
