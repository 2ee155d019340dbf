#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tonepipe/corpus.hpp"
#include "tonepipe/tones.hpp"

namespace tonepipe {

// Offline alias table: normalized alias -> canonical country name. Sources
// are country names, ISO-style aliases and major city names. Immutable after
// load; resolution is pure.
struct Gazetteer {
    std::unordered_map<std::string, std::string> entries;
    std::unordered_set<std::string> countries;  // canonical value set
};

// TSV rows "alias<TAB>country", UTF-8, '#' comment lines and blank lines
// skipped. Aliases are normalized on load. Errors: unreadable or empty file,
// malformed row, the same alias claiming two different countries.
Gazetteer load_gazetteer(const std::filesystem::path& path);

// Lowercases, maps punctuation (except hyphens) and whitespace runs to a
// single space, trims. Composes the common Latin accent sequences first so
// decomposed and precomposed spellings match the same alias.
std::string normalize_location(std::string_view text);

// Splits the raw text on commas, walks segments right to left (profile
// convention puts the country last), and inside a segment tries token
// n-grams longest first, leftmost first. First gazetteer hit wins; no hit
// is std::nullopt, never an error.
std::optional<std::string> resolve_location(std::string_view location_text, const Gazetteer& gz);

struct GeoTaggedTweet {
    TweetRecord tweet;
    ToneVector tones;
    std::string country;
};

struct GeotagResult {
    std::vector<GeoTaggedTweet> tagged;
    std::int64_t dropped_missing = 0;     // no location text at all
    std::int64_t dropped_unresolved = 0;  // text present, no gazetteer hit
    std::vector<std::string> unresolved_samples;  // distinct, capped, for curation
};

inline constexpr std::size_t kMaxUnresolvedSamples = 20;

// Tags each tweet with a country or drops it. tweets and tones are parallel;
// tagged order follows input order, and tagged.size() + dropped_missing +
// dropped_unresolved == tweets.size().
GeotagResult geotag(std::span<const TweetRecord> tweets, std::span<const ToneVector> tones,
                    const Gazetteer& gz);

// JSON drop report: input/tagged/drop counts plus the unresolved samples.
void write_drop_report(std::ostream& out, std::size_t input_size, const GeotagResult& result);

// Tagged CSV: the tweet columns plus "country" and "tones" columns, so the
// analytics stages need no other input.
void write_tagged_csv(std::ostream& out, std::span<const GeoTaggedTweet> tagged);
std::vector<GeoTaggedTweet> read_tagged_csv(const std::filesystem::path& path);

}  // namespace tonepipe
