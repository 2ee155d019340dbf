#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tonepipe/corpus.hpp"

namespace tonepipe {

// Hard cap on sequence length, matching the longest sequence the model
// family is configured for.
inline constexpr std::size_t kMaxSequenceLength = 250;

// Word-level vocabulary with three reserved ids. Immutable once built.
struct Vocabulary {
    static constexpr std::int32_t kPadId = 0;
    static constexpr std::int32_t kUnkId = 1;
    static constexpr std::int32_t kClsId = 2;

    std::unordered_map<std::string, std::int32_t> token_to_id;
    std::vector<std::string> id_to_token;  // contiguous ids 0..size()-1

    std::size_t size() const { return id_to_token.size(); }

    std::int32_t id_of(std::string_view token) const {
        auto it = token_to_id.find(std::string(token));
        return it == token_to_id.end() ? kUnkId : it->second;
    }
};

// Tokenization rule, applied identically at vocabulary build and encode time:
// decode UTF-8, compose common Latin combining sequences, lowercase, then
// split on whitespace and punctuation. '#' and '@' stay attached to the
// word that follows them; bare punctuation runs produce no token.
std::vector<std::string> word_tokens(std::string_view text);

// Tokens ranked by (frequency desc, token asc); the top max_size - 3 with
// frequency >= min_freq get ids 3 upward. Deterministic for a fixed corpus.
Vocabulary build_vocab(std::span<const TweetRecord> corpus, std::size_t max_size,
                       std::size_t min_freq);

// Fixed-length encoded text: ids[0] is cls, then word tokens (unk for OOV),
// truncated to max_len and padded with pad. mask[i] = 1 iff position i holds
// a real token.
struct TokenSequence {
    std::vector<std::int32_t> ids;
    std::vector<std::uint8_t> mask;
};

TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len);

// "token<TAB>id" lines, UTF-8, sorted by id.
void save_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace tonepipe
