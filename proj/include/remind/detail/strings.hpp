#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include "remind/error.hpp"

namespace remind::detail {

// Byte-level token escaping shared by the embedding-table and tokenizer
// file formats: `\xNN` for bytes outside printable ASCII, `\\` for
// backslash. `escape_token` additionally escapes the space byte so tokens
// survive space- and line-delimited files; `unescape_token` accepts \xNN
// for any byte value.
inline std::string escape_token(std::string_view raw, bool escape_space = false) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (c == '\\') {
            out += "\\\\";
        } else if (c < 0x20 || c > 0x7e || (escape_space && c == ' ')) {
            out += "\\x";
            out.push_back(digits[c >> 4]);
            out.push_back(digits[c & 0xf]);
        } else {
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

inline int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

inline std::string unescape_token(std::string_view escaped, const std::string& where) {
    std::string out;
    out.reserve(escaped.size());
    for (size_t i = 0; i < escaped.size(); ++i) {
        char c = escaped[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (i + 1 >= escaped.size())
            raise(ErrorKind::Format, where + ": dangling backslash in token");
        char next = escaped[i + 1];
        if (next == '\\') {
            out.push_back('\\');
            ++i;
        } else if (next == 'x' || next == 'X') {
            if (i + 3 >= escaped.size())
                raise(ErrorKind::Format, where + ": truncated \\xNN escape");
            int hi = hex_value(escaped[i + 2]);
            int lo = hex_value(escaped[i + 3]);
            if (hi < 0 || lo < 0)
                raise(ErrorKind::Format, where + ": bad hex digits in \\xNN escape");
            out.push_back(static_cast<char>(hi * 16 + lo));
            i += 3;
        } else {
            raise(ErrorKind::Format, where + ": unknown escape sequence");
        }
    }
    return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(s.substr(start));
            break;
        }
        parts.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

inline std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return s.substr(b, e - b);
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        raise(ErrorKind::Format, where + ": bad number '" + std::string(s) + "'");
    return v;
}

inline long parse_long(std::string_view s, const std::string& where) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        raise(ErrorKind::Format, where + ": bad integer '" + std::string(s) + "'");
    return v;
}

// Fixed decimal rendering used in reports; deterministic across runs.
inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return buf;
}

// Shortest round-trip rendering for floats written to data files.
inline std::string format_full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace remind::detail
