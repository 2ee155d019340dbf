#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace tonepipe {

// Codepoint-level text helpers shared by the tokenizer and the gazetteer
// normalizer. Invalid UTF-8 bytes decode to U+FFFD; encoding a string that
// was decoded here is therefore not byte-identity for malformed input, which
// is fine -- all downstream consumers work on the decoded form.

std::u32string decode_utf8(std::string_view bytes);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(const std::u32string& cps);

// Simple case folding: ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic
// base ranges. Everything else maps to itself.
char32_t to_lower(char32_t cp);

bool is_whitespace(char32_t cp);

// ASCII punctuation plus the common Unicode punctuation blocks seen in
// social-media text (general punctuation, CJK symbols, fullwidth forms).
bool is_punctuation(char32_t cp);

// Canonical composition for the common Latin base + combining mark pairs
// (acute, grave, circumflex, tilde, diaeresis, ring, cedilla). Sequences
// without a precomposed form are left untouched.
std::u32string compose_nfc(const std::u32string& cps);

}  // namespace tonepipe
