#include "smellmap/textnorm.hpp"

#include <cstdint>
#include <unordered_map>

namespace smellmap::text {

std::vector<char32_t> decode_utf8(const std::string& s) {
    std::vector<char32_t> out;
    out.reserve(s.size());
    std::size_t i = 0;
    const std::size_t n = s.size();
    while (i < n) {
        const unsigned char b0 = static_cast<unsigned char>(s[i]);
        char32_t cp = 0xFFFD;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xE0) == 0xC0 && i + 1 < n) {
            const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
            if ((b1 & 0xC0) == 0x80) {
                cp = (static_cast<char32_t>(b0 & 0x1F) << 6) | (b1 & 0x3F);
                len = 2;
                if (cp < 0x80) cp = 0xFFFD;  // overlong
            }
        } else if ((b0 & 0xF0) == 0xE0 && i + 2 < n) {
            const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
            const unsigned char b2 = static_cast<unsigned char>(s[i + 2]);
            if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80) {
                cp = (static_cast<char32_t>(b0 & 0x0F) << 12) |
                     (static_cast<char32_t>(b1 & 0x3F) << 6) | (b2 & 0x3F);
                len = 3;
                if (cp < 0x800) cp = 0xFFFD;
            }
        } else if ((b0 & 0xF8) == 0xF0 && i + 3 < n) {
            const unsigned char b1 = static_cast<unsigned char>(s[i + 1]);
            const unsigned char b2 = static_cast<unsigned char>(s[i + 2]);
            const unsigned char b3 = static_cast<unsigned char>(s[i + 3]);
            if ((b1 & 0xC0) == 0x80 && (b2 & 0xC0) == 0x80 && (b3 & 0xC0) == 0x80) {
                cp = (static_cast<char32_t>(b0 & 0x07) << 18) |
                     (static_cast<char32_t>(b1 & 0x3F) << 12) |
                     (static_cast<char32_t>(b2 & 0x3F) << 6) | (b3 & 0x3F);
                len = 4;
                if (cp < 0x10000 || cp > 0x10FFFF) cp = 0xFFFD;
            }
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
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
    return out;
}

bool is_space(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
        case 0x205F: case 0x3000:
            return true;
        default:
            return (c >= 0x2000 && c <= 0x200B);
    }
}

bool is_punct(char32_t c) {
    if (c < 0x80) {
        return (c >= U'!' && c <= U'/') || (c >= U':' && c <= U'@') ||
               (c >= U'[' && c <= U'`') || (c >= U'{' && c <= U'~');
    }
    switch (c) {
        case 0x00A1:  // inverted exclamation
        case 0x00BF:  // inverted question
        case 0x00AB: case 0x00BB:  // guillemets
        case 0x00B7:  // middle dot
            return true;
        default:
            // General punctuation block, minus the space subrange handled above.
            return (c >= 0x2010 && c <= 0x205E);
    }
}

char32_t to_lower(char32_t c) {
    if (c >= U'A' && c <= U'Z') return c + 0x20;
    // Latin-1 supplement uppercase (except multiplication sign 0x00D7).
    if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) return c + 0x20;
    if (c == 0x0178) return 0x00FF;  // Y with diaeresis
    // Latin Extended-A comes in upper/lower pairs.
    if (c >= 0x0100 && c <= 0x0137) return (c % 2 == 0) ? c + 1 : c;
    if (c >= 0x0139 && c <= 0x0148) return (c % 2 == 1) ? c + 1 : c;
    if (c >= 0x014A && c <= 0x0177) return (c % 2 == 0) ? c + 1 : c;
    if (c >= 0x0179 && c <= 0x017E) return (c % 2 == 1) ? c + 1 : c;
    return c;
}

namespace {

// (base << 21) | combining -> precomposed, for the Latin letters that occur
// in English/Spanish text.
const std::unordered_map<std::uint64_t, char32_t>& composition_table() {
    static const std::unordered_map<std::uint64_t, char32_t> table = [] {
        std::unordered_map<std::uint64_t, char32_t> t;
        auto add = [&t](char32_t base, char32_t mark, char32_t composed) {
            t[(static_cast<std::uint64_t>(base) << 21) | mark] = composed;
        };
        const char32_t grave = 0x0300, acute = 0x0301, circ = 0x0302,
                       tilde = 0x0303, diaer = 0x0308, ring = 0x030A,
                       cedilla = 0x0327;
        // A E I O U lower/upper with the four common marks.
        const char32_t vowels[] = {U'a', U'e', U'i', U'o', U'u',
                                   U'A', U'E', U'I', U'O', U'U'};
        const char32_t grave_out[] = {0xE0, 0xE8, 0xEC, 0xF2, 0xF9,
                                      0xC0, 0xC8, 0xCC, 0xD2, 0xD9};
        const char32_t acute_out[] = {0xE1, 0xE9, 0xED, 0xF3, 0xFA,
                                      0xC1, 0xC9, 0xCD, 0xD3, 0xDA};
        const char32_t circ_out[] = {0xE2, 0xEA, 0xEE, 0xF4, 0xFB,
                                     0xC2, 0xCA, 0xCE, 0xD4, 0xDB};
        const char32_t diaer_out[] = {0xE4, 0xEB, 0xEF, 0xF6, 0xFC,
                                      0xC4, 0xCB, 0xCF, 0xD6, 0xDC};
        for (int i = 0; i < 10; ++i) {
            add(vowels[i], grave, grave_out[i]);
            add(vowels[i], acute, acute_out[i]);
            add(vowels[i], circ, circ_out[i]);
            add(vowels[i], diaer, diaer_out[i]);
        }
        add(U'n', tilde, 0xF1);
        add(U'N', tilde, 0xD1);
        add(U'a', tilde, 0xE3);
        add(U'A', tilde, 0xC3);
        add(U'o', tilde, 0xF5);
        add(U'O', tilde, 0xD5);
        add(U'c', cedilla, 0xE7);
        add(U'C', cedilla, 0xC7);
        add(U'a', ring, 0xE5);
        add(U'A', ring, 0xC5);
        add(U'y', acute, 0xFD);
        add(U'Y', acute, 0xDD);
        add(U'y', diaer, 0xFF);
        return t;
    }();
    return table;
}

bool is_alnum(char32_t c) {
    if (c < 0x80) {
        return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') ||
               (c >= U'A' && c <= U'Z');
    }
    return !is_space(c) && !is_punct(c) && !(c >= 0x0300 && c <= 0x036F);
}

}  // namespace

std::vector<char32_t> compose(const std::vector<char32_t>& cps) {
    std::vector<char32_t> out;
    out.reserve(cps.size());
    const auto& table = composition_table();
    for (char32_t cp : cps) {
        if (!out.empty() && cp >= 0x0300 && cp <= 0x036F) {
            const auto it =
                table.find((static_cast<std::uint64_t>(out.back()) << 21) | cp);
            if (it != table.end()) {
                out.back() = it->second;
                continue;
            }
        }
        out.push_back(cp);
    }
    return out;
}

std::string normalize_token(const std::string& raw) {
    std::vector<char32_t> cps = compose(decode_utf8(raw));
    for (char32_t& c : cps) c = to_lower(c);
    std::size_t lo = 0, hi = cps.size();
    while (lo < hi && (is_punct(cps[lo]) || is_space(cps[lo]))) ++lo;
    while (hi > lo && (is_punct(cps[hi - 1]) || is_space(cps[hi - 1]))) --hi;
    return encode_utf8(std::vector<char32_t>(cps.begin() + lo, cps.begin() + hi));
}

std::vector<std::string> tokenize(const std::string& raw) {
    const std::vector<char32_t> cps = compose(decode_utf8(raw));
    std::vector<std::string> tokens;
    std::vector<char32_t> cur;
    auto flush = [&] {
        if (!cur.empty()) {
            for (char32_t& c : cur) c = to_lower(c);
            tokens.push_back(encode_utf8(cur));
            cur.clear();
        }
    };
    const std::size_t n = cps.size();
    for (std::size_t i = 0; i < n; ++i) {
        const char32_t c = cps[i];
        bool separator = is_space(c) || is_punct(c);
        if (separator && (c == U'-' || c == 0x2010 || c == 0x2011)) {
            // Internal hyphen: keep when flanked by alphanumerics.
            if (i > 0 && i + 1 < n && is_alnum(cps[i - 1]) && is_alnum(cps[i + 1])) {
                separator = false;
            }
        }
        if (separator) {
            flush();
        } else {
            cur.push_back(c);
        }
    }
    flush();
    return tokens;
}

}  // namespace smellmap::text
