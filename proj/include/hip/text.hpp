#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include "hip/error.hpp"

namespace hip::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

/// Decodes UTF-8; malformed sequences become U+FFFD, one per offending byte.
inline std::u32string utf8_decode(std::string_view s) {
    std::u32string out;
    out.reserve(s.size());
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n) {
        const unsigned char c = p[i];
        if (c < 0x80) {
            out.push_back(c);
            ++i;
            continue;
        }
        int len = 0;
        char32_t cp = 0;
        if ((c & 0xE0) == 0xC0) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c & 0xF0) == 0xE0) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c & 0xF8) == 0xF0) {
            len = 4;
            cp = c & 0x07;
        } else {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        if (i + len > n) {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            if ((p[i + k] & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (p[i + k] & 0x3F);
        }
        const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                              (len == 4 && cp < 0x10000);
        if (!ok || overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(kReplacementChar);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
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

inline std::string utf8_encode(std::u32string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char32_t cp : s) utf8_append(out, cp);
    return out;
}

inline std::size_t char_count(std::string_view s) { return utf8_decode(s).size(); }

/// Space, tab and the Unicode space separators. Line breaks are not included.
inline bool is_horizontal_space(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\v': case U'\f':
        case 0x00A0: case 0x1680: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200A;
    }
}

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_ascii_space(s[b])) ++b;
    while (e > b && is_ascii_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

// Control characters, lone surrogates, noncharacters and decoding failures
// count as non-printable; newline and tab do not.
inline bool is_printable(char32_t c) {
    if (c == U'\n' || c == U'\t') return true;
    if (c < 0x20 || (c >= 0x7F && c <= 0x9F)) return false;
    if (c == kReplacementChar || c == 0xFFFE || c == 0xFFFF) return false;
    return true;
}

/// Fraction of code points that are printable; 1.0 for the empty string.
inline double printable_ratio(std::string_view s) {
    const auto cps = utf8_decode(s);
    if (cps.empty()) return 1.0;
    const auto good = std::count_if(cps.begin(), cps.end(), is_printable);
    return static_cast<double>(good) / static_cast<double>(cps.size());
}

/// Whitespace-delimited words, as views into `s`.
inline std::vector<std::string_view> split_words(std::string_view s) {
    std::vector<std::string_view> words;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_ascii_space(s[i])) ++i;
        const std::size_t start = i;
        while (i < s.size() && !is_ascii_space(s[i])) ++i;
        if (i > start) words.push_back(s.substr(start, i - start));
    }
    return words;
}

inline std::size_t word_count(std::string_view s) { return split_words(s).size(); }

/// Largest number of occurrences of any single word n-gram.
inline std::size_t max_ngram_repeat(std::string_view s, std::size_t n) {
    const auto words = split_words(s);
    if (n == 0 || words.size() < n) return 0;
    std::map<std::vector<std::string_view>, std::size_t> counts;
    std::size_t best = 0;
    for (std::size_t i = 0; i + n <= words.size(); ++i) {
        std::vector<std::string_view> key(words.begin() + static_cast<std::ptrdiff_t>(i),
                                          words.begin() + static_cast<std::ptrdiff_t>(i + n));
        best = std::max(best, ++counts[std::move(key)]);
    }
    return best;
}

namespace detail {

inline std::string to_utf8(const icu::UnicodeString& u) {
    std::string out;
    u.toUTF8String(out);
    return out;
}

inline const icu::Normalizer2& nfc() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) throw Error("icu_error", "NFC normalizer unavailable");
    return *n;
}

}  // namespace detail

/// Unicode canonical composition (NFC).
inline std::string nfc(std::string_view s) {
    const auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    UErrorCode status = U_ZERO_ERROR;
    const auto composed = detail::nfc().normalize(u, status);
    if (U_FAILURE(status)) throw Error("icu_error", u_errorName(status));
    return detail::to_utf8(composed);
}

/// Full Unicode case folding.
inline std::string case_fold(std::string_view s) {
    auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u.foldCase();
    return detail::to_utf8(u);
}

// Canonical textual form used everywhere downstream:
//   NFC, CRLF/CR -> LF, horizontal whitespace runs -> one space, each line
//   trimmed, blank-line runs -> one blank line, outer whitespace stripped.
// Case and all other characters are left alone. Idempotent.
inline std::string normalize_text(std::string_view raw) {
    const std::u32string cps = utf8_decode(nfc(raw));

    std::vector<std::u32string> lines(1);
    for (std::size_t i = 0; i < cps.size(); ++i) {
        const char32_t c = cps[i];
        if (c == U'\r') {
            if (i + 1 < cps.size() && cps[i + 1] == U'\n') ++i;
            lines.emplace_back();
        } else if (c == U'\n') {
            lines.emplace_back();
        } else if (is_horizontal_space(c)) {
            auto& line = lines.back();
            if (!line.empty() && line.back() != U' ') line.push_back(U' ');
        } else {
            lines.back().push_back(c);
        }
    }

    std::string out;
    bool pending_blank = false;
    bool any = false;
    for (auto& line : lines) {
        while (!line.empty() && line.back() == U' ') line.pop_back();
        if (line.empty()) {
            pending_blank = any;
            continue;
        }
        if (any) out += pending_blank ? "\n\n" : "\n";
        out += utf8_encode(line);
        any = true;
        pending_blank = false;
    }
    return out;
}

}  // namespace hip::text
