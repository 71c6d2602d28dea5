// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace podrank {

namespace detail {

// Non-ASCII code points that separate words: Latin-1 punctuation, general
// punctuation, arrows/math/box drawing, CJK and fullwidth punctuation, emoji.
constexpr bool is_separator_codepoint(char32_t cp) noexcept {
    if (cp >= 0x80 && cp <= 0xBF) {
        return !(cp == 0xAA || cp == 0xB2 || cp == 0xB3 || cp == 0xB5 || cp == 0xB9 || cp == 0xBA);
    }
    if (cp == 0xD7 || cp == 0xF7 || cp == 0xFEFF) return true;
    if (cp >= 0x2000 && cp <= 0x206F) return true;
    if (cp >= 0x2190 && cp <= 0x2BFF) return true;
    if (cp >= 0x3000 && cp <= 0x303F) return true;
    if (cp >= 0xFE30 && cp <= 0xFE4F) return true;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return true;
    if (cp >= 0xFF1A && cp <= 0xFF20) return true;
    if (cp >= 0xFF3B && cp <= 0xFF40) return true;
    if (cp >= 0xFF5B && cp <= 0xFF65) return true;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return true;
    return false;
}

// Simple case folding for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
constexpr char32_t to_lower(char32_t cp) noexcept {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0x100 && cp <= 0x137) return cp | 1u;
    if (cp >= 0x139 && cp <= 0x148) return (cp & 1u) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return cp | 1u;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E) return (cp & 1u) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Decodes one code point at text[i]; returns 0xFFFFFFFF for invalid sequences
// and always advances i by at least one byte.
inline char32_t next_codepoint(std::string_view text, std::size_t& i) noexcept {
    constexpr char32_t invalid = 0xFFFFFFFF;
    auto lead = static_cast<unsigned char>(text[i++]);
    if (lead < 0x80) return lead;
    int extra = 0;
    char32_t cp = 0;
    if ((lead & 0xE0) == 0xC0) { extra = 1; cp = lead & 0x1F; }
    else if ((lead & 0xF0) == 0xE0) { extra = 2; cp = lead & 0x0F; }
    else if ((lead & 0xF8) == 0xF0) { extra = 3; cp = lead & 0x07; }
    else return invalid;
    for (int k = 0; k < extra; ++k) {
        if (i >= text.size()) return invalid;
        auto c = static_cast<unsigned char>(text[i]);
        if ((c & 0xC0) != 0x80) return invalid;
        cp = (cp << 6) | (c & 0x3F);
        ++i;
    }
    return cp;
}

}  // namespace detail

/// Lowercasing word splitter. Any character that is not a letter or digit
/// ends a token; there is no stemming. Stopwords are removed only when a
/// list is configured.
class Tokenizer {
public:
    Tokenizer() = default;
    explicit Tokenizer(std::unordered_set<std::string> stopwords) : stopwords_(std::move(stopwords)) {}

    std::vector<std::string> operator()(std::string_view text) const {
        std::vector<std::string> tokens;
        std::string current;
        auto flush = [&] {
            if (!current.empty()) {
                if (!stopwords_.contains(current)) tokens.push_back(current);
                current.clear();
            }
        };
        std::size_t i = 0;
        while (i < text.size()) {
            char32_t cp = detail::next_codepoint(text, i);
            bool word_char;
            if (cp == 0xFFFFFFFF) {
                word_char = false;
            } else if (cp < 0x80) {
                word_char = (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
            } else {
                word_char = !detail::is_separator_codepoint(cp);
            }
            if (word_char) {
                detail::append_utf8(current, detail::to_lower(cp));
            } else {
                flush();
            }
        }
        flush();
        return tokens;
    }

    const std::unordered_set<std::string>& stopwords() const noexcept { return stopwords_; }

private:
    std::unordered_set<std::string> stopwords_;
};

inline std::vector<std::string> tokenize(std::string_view text) { return Tokenizer{}(text); }

}  // namespace podrank
