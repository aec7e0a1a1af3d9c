#ifndef TOXSPAN_UNICODE_HPP
#define TOXSPAN_UNICODE_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace toxspan::unicode {

inline constexpr char32_t replacement = 0xFFFD;

/// Decodes UTF-8 into Unicode scalars. Each invalid byte becomes U+FFFD so
/// the result always has one element per decoded position.
inline std::u32string decode(std::string_view in) {
    std::u32string out;
    out.reserve(in.size());
    std::size_t i = 0;
    const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(in[k]); };
    while (i < in.size()) {
        const unsigned char b0 = byte(i);
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        std::size_t len = 0;
        char32_t cp = 0;
        char32_t min = 0;
        if ((b0 & 0xE0) == 0xC0) {
            len = 2; cp = b0 & 0x1F; min = 0x80;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3; cp = b0 & 0x0F; min = 0x800;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4; cp = b0 & 0x07; min = 0x10000;
        }
        bool ok = len != 0 && i + len <= in.size();
        for (std::size_t k = 1; ok && k < len; ++k) {
            const unsigned char b = byte(i + k);
            if ((b & 0xC0) != 0x80) ok = false;
            cp = (cp << 6) | (b & 0x3F);
        }
        if (ok && (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))) ok = false;
        if (!ok) {
            out.push_back(replacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

inline void append(std::string& out, char32_t cp) {
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

inline std::string encode(std::u32string_view in) {
    std::string out;
    out.reserve(in.size());
    for (char32_t cp : in) append(out, cp);
    return out;
}

/// Length of a UTF-8 string in scalars, consistent with decode().
inline std::size_t length(std::string_view in) { return decode(in).size(); }

inline bool is_space(char32_t c) {
    if (c == 0x20 || (c >= 0x09 && c <= 0x0D)) return true;
    if (c < 0x80) return false;
    return c == 0x85 || c == 0xA0 || c == 0x1680 || (c >= 0x2000 && c <= 0x200A) ||
           c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

/// Coarse letter-or-digit test. ASCII is exact; above ASCII every scalar
/// counts as alphanumeric except the punctuation, symbol, space and emoji
/// blocks listed here. Combining marks count as word characters.
inline bool is_alnum(char32_t c) {
    if (c < 0x80) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    }
    if (is_space(c)) return false;
    if (c <= 0xBF) {
        return c == 0xAA || c == 0xB2 || c == 0xB3 || c == 0xB5 || c == 0xB9 || c == 0xBA;
    }
    if (c == 0xD7 || c == 0xF7) return false;
    if (c == 0x37E || c == 0x387) return false;
    if ((c >= 0x55A && c <= 0x55F) || c == 0x589) return false;
    if (c == 0x5BE || c == 0x5C0 || c == 0x5C3 || c == 0x5C6 || c == 0x5F3 || c == 0x5F4) return false;
    if ((c >= 0x600 && c <= 0x60F) || (c >= 0x61B && c <= 0x61F) || (c >= 0x66A && c <= 0x66D) ||
        c == 0x6D4) {
        return false;
    }
    if (c == 0x964 || c == 0x965) return false;
    if (c >= 0x2000 && c <= 0x206F) return false; // general punctuation
    if (c >= 0x20A0 && c <= 0x20CF) return false; // currency
    if (c >= 0x2190 && c <= 0x2BFF) return false; // arrows, math, shapes, dingbats
    if (c >= 0x2E00 && c <= 0x2E7F) return false;
    if (c >= 0x3000 && c <= 0x303F) return false;
    if (c >= 0xFE00 && c <= 0xFE0F) return false; // variation selectors
    if ((c >= 0xFE10 && c <= 0xFE1F) || (c >= 0xFE30 && c <= 0xFE6F)) return false;
    if ((c >= 0xFF00 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) ||
        (c >= 0xFF3B && c <= 0xFF40) || (c >= 0xFF5B && c <= 0xFF65)) {
        return false;
    }
    if (c >= 0xFFF0 && c <= 0xFFFF) return false;
    if (c >= 0x1F000 && c <= 0x1FAFF) return false; // emoji and pictographs
    if (c >= 0xE0000 && c <= 0xE007F) return false;
    return true;
}

inline bool is_punct(char32_t c) { return !is_alnum(c) && !is_space(c); }

/// Simple lowercase mapping restricted to one-scalar results. Characters
/// whose lowercase form would need more than one scalar are returned as-is.
inline char32_t to_lower(char32_t c) {
    if (c < 0x80) return (c >= 'A' && c <= 'Z') ? c + 0x20 : c;
    if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
    if (c >= 0x100 && c <= 0x137 && c != 0x130) return c | 1;
    if (c >= 0x139 && c <= 0x148) return (c & 1) ? c + 1 : c;
    if (c >= 0x14A && c <= 0x177) return c | 1;
    if (c == 0x178) return 0xFF;
    if (c >= 0x179 && c <= 0x17E) return (c & 1) ? c + 1 : c;
    if (c == 0x386) return 0x3AC;
    if (c >= 0x388 && c <= 0x38A) return c + 37;
    if (c == 0x38C) return 0x3CC;
    if (c == 0x38E || c == 0x38F) return c + 63;
    if (c >= 0x391 && c <= 0x3AB && c != 0x3A2) return c + 0x20;
    if (c >= 0x400 && c <= 0x40F) return c + 0x50;
    if (c >= 0x410 && c <= 0x42F) return c + 0x20;
    if ((c >= 0x460 && c <= 0x481) || (c >= 0x48A && c <= 0x4BF)) return c | 1;
    if (c >= 0xFF21 && c <= 0xFF3A) return c + 0x20;
    return c;
}

inline std::u32string to_lower(std::u32string_view in) {
    std::u32string out(in);
    for (auto& c : out) c = to_lower(c);
    return out;
}

inline std::string to_lower(std::string_view utf8) { return encode(to_lower(decode(utf8))); }

} // namespace toxspan::unicode

#endif // TOXSPAN_UNICODE_HPP
