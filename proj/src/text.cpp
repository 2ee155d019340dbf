#include "tonepipe/text.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace tonepipe {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Latin base + combining mark -> precomposed codepoint.
struct Composition {
    char32_t base;
    char32_t mark;
    char32_t composed;
};

constexpr char32_t kGrave = 0x0300, kAcute = 0x0301, kCirc = 0x0302, kTilde = 0x0303,
                   kDiaer = 0x0308, kRing = 0x030A, kCedilla = 0x0327;

constexpr std::array<Composition, 64> kCompositions{{
    {U'a', kGrave, 0x00E0},  {U'e', kGrave, 0x00E8},  {U'i', kGrave, 0x00EC},
    {U'o', kGrave, 0x00F2},  {U'u', kGrave, 0x00F9},  {U'A', kGrave, 0x00C0},
    {U'E', kGrave, 0x00C8},  {U'I', kGrave, 0x00CC},  {U'O', kGrave, 0x00D2},
    {U'U', kGrave, 0x00D9},  {U'a', kAcute, 0x00E1},  {U'e', kAcute, 0x00E9},
    {U'i', kAcute, 0x00ED},  {U'o', kAcute, 0x00F3},  {U'u', kAcute, 0x00FA},
    {U'y', kAcute, 0x00FD},  {U'A', kAcute, 0x00C1},  {U'E', kAcute, 0x00C9},
    {U'I', kAcute, 0x00CD},  {U'O', kAcute, 0x00D3},  {U'U', kAcute, 0x00DA},
    {U'Y', kAcute, 0x00DD},  {U'c', kAcute, 0x0107},  {U'C', kAcute, 0x0106},
    {U'n', kAcute, 0x0144},  {U'N', kAcute, 0x0143},  {U's', kAcute, 0x015B},
    {U'S', kAcute, 0x015A},  {U'z', kAcute, 0x017A},  {U'Z', kAcute, 0x0179},
    {U'a', kCirc, 0x00E2},   {U'e', kCirc, 0x00EA},   {U'i', kCirc, 0x00EE},
    {U'o', kCirc, 0x00F4},   {U'u', kCirc, 0x00FB},   {U'A', kCirc, 0x00C2},
    {U'E', kCirc, 0x00CA},   {U'I', kCirc, 0x00CE},   {U'O', kCirc, 0x00D4},
    {U'U', kCirc, 0x00DB},   {U'a', kTilde, 0x00E3},  {U'n', kTilde, 0x00F1},
    {U'o', kTilde, 0x00F5},  {U'A', kTilde, 0x00C3},  {U'N', kTilde, 0x00D1},
    {U'O', kTilde, 0x00D5},  {U'a', kDiaer, 0x00E4},  {U'e', kDiaer, 0x00EB},
    {U'i', kDiaer, 0x00EF},  {U'o', kDiaer, 0x00F6},  {U'u', kDiaer, 0x00FC},
    {U'y', kDiaer, 0x00FF},  {U'A', kDiaer, 0x00C4},  {U'E', kDiaer, 0x00CB},
    {U'I', kDiaer, 0x00CF},  {U'O', kDiaer, 0x00D6},  {U'U', kDiaer, 0x00DC},
    {U'a', kRing, 0x00E5},   {U'A', kRing, 0x00C5},   {U'c', kCedilla, 0x00E7},
    {U'C', kCedilla, 0x00C7}, {U's', kCedilla, 0x015F}, {U'S', kCedilla, 0x015E},
    {U'Y', kDiaer, 0x0178},
}};

char32_t compose_pair(char32_t base, char32_t mark) {
    for (const auto& c : kCompositions) {
        if (c.base == base && c.mark == mark) return c.composed;
    }
    return 0;
}

}  // namespace

std::u32string decode_utf8(std::string_view bytes) {
    std::u32string out;
    out.reserve(bytes.size());
    std::size_t i = 0;
    const auto n = bytes.size();
    auto byte = [&](std::size_t k) { return static_cast<unsigned char>(bytes[k]); };
    while (i < n) {
        unsigned char b0 = byte(i);
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        int len = 0;
        char32_t cp = 0;
        if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > n) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            unsigned char bk = byte(i + k);
            if ((bk & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        // Reject overlong encodings, surrogates and out-of-range values.
        if (ok) {
            if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
                (len == 4 && cp < 0x10000) || cp > 0x10FFFF ||
                (cp >= 0xD800 && cp <= 0xDFFF)) {
                ok = false;
            }
        }
        if (!ok) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
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

std::string encode_utf8(const std::u32string& cps) {
    std::string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

char32_t to_lower(char32_t cp) {
    if (cp >= U'A' && cp <= U'Z') return cp + 0x20;
    if (cp >= 0x00C0 && cp <= 0x00DE && cp != 0x00D7) return cp + 0x20;
    if (cp >= 0x0100 && cp <= 0x0137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x014A && cp <= 0x0177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x0178) return 0x00FF;
    if (cp >= 0x0179 && cp <= 0x017E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 0x20;
    if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;
    if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
    return cp;
}

bool is_whitespace(char32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

bool is_punctuation(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    }
    if (cp >= 0xA1 && cp <= 0xBF) {
        // Keep the Latin-1 letters (feminine/masculine ordinals, micro sign).
        return cp != 0xAA && cp != 0xB5 && cp != 0xBA;
    }
    if (cp == 0xD7 || cp == 0xF7) return true;
    if (cp >= 0x2010 && cp <= 0x2027) return true;
    if (cp >= 0x2030 && cp <= 0x205E) return true;
    if (cp >= 0x2E00 && cp <= 0x2E7F) return true;
    if ((cp >= 0x3001 && cp <= 0x3003) || (cp >= 0x3008 && cp <= 0x3011) ||
        (cp >= 0x3014 && cp <= 0x301F) || cp == 0x3030) {
        return true;
    }
    if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) ||
        (cp >= 0xFF3B && cp <= 0xFF40) || (cp >= 0xFF5B && cp <= 0xFF65)) {
        return true;
    }
    return false;
}

std::u32string compose_nfc(const std::u32string& cps) {
    std::u32string out;
    out.reserve(cps.size());
    for (char32_t cp : cps) {
        if (!out.empty()) {
            if (char32_t composed = compose_pair(out.back(), cp); composed != 0) {
                out.back() = composed;
                continue;
            }
        }
        out.push_back(cp);
    }
    return out;
}

}  // namespace tonepipe
