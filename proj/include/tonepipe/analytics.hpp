#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tonepipe/date.hpp"
#include "tonepipe/geoloc.hpp"
#include "tonepipe/tones.hpp"

namespace tonepipe {

struct CountryToneCounts {
    std::string country;
    std::int64_t total_tweets = 0;  // each geotagged tweet once, zero-tone ones included
    std::array<std::int64_t, kNumTones> tone_counts{};  // multi-label: may sum past total
};

// Keyed and iterated in country order so every report built on top is stable.
using CountryCounts = std::map<std::string, CountryToneCounts>;

CountryCounts aggregate(std::span<const GeoTaggedTweet> tagged);

// Associative: aggregating shards and merging equals aggregating the whole.
void merge_counts(CountryCounts& into, const CountryCounts& from);

// Global per-tone totals across all countries.
std::array<std::int64_t, kNumTones> tone_histogram(const CountryCounts& counts);

// Two indicator families per country: rates over the total tweet count
// (stated_hi/si) and the joy<->sadness count ratios. A ratio with a zero
// denominator is absent, never 0 or infinity.
struct IndicatorRow {
    std::string country;
    std::int64_t total_tweets = 0;
    std::int64_t joy_count = 0;
    std::int64_t sadness_count = 0;
    double stated_hi = 0.0;  // joy / total
    double stated_si = 0.0;  // sadness / total
    std::optional<double> joy_sadness_ratio;
    std::optional<double> sadness_joy_ratio;
};

// Throws when total_tweets is zero; a country with no tweets has no rates.
IndicatorRow indicators(const CountryToneCounts& counts);

enum class IndicatorKey { kStatedHi, kStatedSi, kJoySadnessRatio, kSadnessJoyRatio };

std::string_view indicator_key_name(IndicatorKey key);
std::optional<IndicatorKey> parse_indicator_key(std::string_view name);
std::optional<double> indicator_value(const IndicatorRow& row, IndicatorKey key);

// Rows with total_tweets >= min_total and a defined key, sorted by key
// descending with alphabetical tie-break, truncated to top_n. The volume
// floor keeps one-tweet countries from topping the ratio boards.
std::vector<IndicatorRow> rank_countries(std::span<const IndicatorRow> rows, IndicatorKey key,
                                         std::int64_t min_total = 100, std::int64_t top_n = 10);

struct SeriesRow {
    std::string country;
    Date date{};
    ToneLabel tone{};
    std::int64_t count = 0;
};

inline constexpr std::string_view kGlobalSeriesName = "ALL";

// Per-(country, day, tone) counts, dense over the observed date range: gap
// days appear with zero counts, on a shared date axis. With no country
// filter all tweets collapse into one global "ALL" series. Rows ordered
// (country asc, date asc, tone index asc); summing a (country, tone) over
// dates reproduces aggregate()'s tone count.
std::vector<SeriesRow> temporal_series(std::span<const GeoTaggedTweet> tagged,
                                       const std::optional<std::vector<std::string>>& countries);

// Report CSVs. Ratios that are absent print as empty fields.
void write_counts_csv(std::ostream& out, const CountryCounts& counts);
void write_indicators_csv(std::ostream& out, std::span<const IndicatorRow> rows);
void write_ranking_csv(std::ostream& out, std::span<const IndicatorRow> ranked, IndicatorKey key);
void write_series_csv(std::ostream& out, std::span<const SeriesRow> series);

}  // namespace tonepipe
