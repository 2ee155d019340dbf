#include "tonepipe/analytics.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "tonepipe/csv.hpp"

namespace tonepipe {

CountryCounts aggregate(std::span<const GeoTaggedTweet> tagged) {
    CountryCounts out;
    for (const auto& g : tagged) {
        auto& c = out[g.country];
        if (c.country.empty()) c.country = g.country;
        ++c.total_tweets;
        for (int t = 0; t < kNumTones; ++t)
            if (g.tones.test(static_cast<ToneLabel>(t))) ++c.tone_counts[static_cast<std::size_t>(t)];
    }
    return out;
}

void merge_counts(CountryCounts& into, const CountryCounts& from) {
    for (const auto& [name, c] : from) {
        auto& dst = into[name];
        if (dst.country.empty()) dst.country = name;
        dst.total_tweets += c.total_tweets;
        for (std::size_t t = 0; t < kNumTones; ++t) dst.tone_counts[t] += c.tone_counts[t];
    }
}

std::array<std::int64_t, kNumTones> tone_histogram(const CountryCounts& counts) {
    std::array<std::int64_t, kNumTones> hist{};
    for (const auto& [name, c] : counts)
        for (std::size_t t = 0; t < kNumTones; ++t) hist[t] += c.tone_counts[t];
    return hist;
}

IndicatorRow indicators(const CountryToneCounts& counts) {
    if (counts.total_tweets <= 0)
        throw std::runtime_error("indicators undefined for zero tweets in '" + counts.country +
                                 "'");
    IndicatorRow row;
    row.country = counts.country;
    row.total_tweets = counts.total_tweets;
    row.joy_count = counts.tone_counts[static_cast<std::size_t>(ToneLabel::kJoy)];
    row.sadness_count = counts.tone_counts[static_cast<std::size_t>(ToneLabel::kSadness)];
    const auto total = static_cast<double>(counts.total_tweets);
    row.stated_hi = static_cast<double>(row.joy_count) / total;
    row.stated_si = static_cast<double>(row.sadness_count) / total;
    if (row.sadness_count > 0)
        row.joy_sadness_ratio =
            static_cast<double>(row.joy_count) / static_cast<double>(row.sadness_count);
    if (row.joy_count > 0)
        row.sadness_joy_ratio =
            static_cast<double>(row.sadness_count) / static_cast<double>(row.joy_count);
    return row;
}

std::string_view indicator_key_name(IndicatorKey key) {
    switch (key) {
        case IndicatorKey::kStatedHi: return "stated_hi";
        case IndicatorKey::kStatedSi: return "stated_si";
        case IndicatorKey::kJoySadnessRatio: return "joy_sadness_ratio";
        case IndicatorKey::kSadnessJoyRatio: return "sadness_joy_ratio";
    }
    throw std::logic_error("unreachable indicator key");
}

std::optional<IndicatorKey> parse_indicator_key(std::string_view name) {
    for (IndicatorKey key : {IndicatorKey::kStatedHi, IndicatorKey::kStatedSi,
                             IndicatorKey::kJoySadnessRatio, IndicatorKey::kSadnessJoyRatio})
        if (name == indicator_key_name(key)) return key;
    return std::nullopt;
}

std::optional<double> indicator_value(const IndicatorRow& row, IndicatorKey key) {
    switch (key) {
        case IndicatorKey::kStatedHi: return row.stated_hi;
        case IndicatorKey::kStatedSi: return row.stated_si;
        case IndicatorKey::kJoySadnessRatio: return row.joy_sadness_ratio;
        case IndicatorKey::kSadnessJoyRatio: return row.sadness_joy_ratio;
    }
    throw std::logic_error("unreachable indicator key");
}

std::vector<IndicatorRow> rank_countries(std::span<const IndicatorRow> rows, IndicatorKey key,
                                         std::int64_t min_total, std::int64_t top_n) {
    if (top_n < 1) throw std::runtime_error("top_n must be >= 1");
    std::vector<IndicatorRow> kept;
    for (const auto& row : rows)
        if (row.total_tweets >= min_total && indicator_value(row, key)) kept.push_back(row);
    std::sort(kept.begin(), kept.end(), [&](const IndicatorRow& a, const IndicatorRow& b) {
        const double va = *indicator_value(a, key);
        const double vb = *indicator_value(b, key);
        if (va != vb) return va > vb;
        return a.country < b.country;
    });
    if (kept.size() > static_cast<std::size_t>(top_n)) kept.resize(static_cast<std::size_t>(top_n));
    return kept;
}

std::vector<SeriesRow> temporal_series(std::span<const GeoTaggedTweet> tagged,
                                       const std::optional<std::vector<std::string>>& countries) {
    const bool global = !countries.has_value();
    std::set<std::string> filter;
    if (countries) filter.insert(countries->begin(), countries->end());

    std::map<std::string, std::map<Date, std::array<std::int64_t, kNumTones>>> buckets;
    Date first{}, last{};
    bool any = false;
    for (const auto& g : tagged) {
        if (!global && filter.find(g.country) == filter.end()) continue;
        const std::string name = global ? std::string(kGlobalSeriesName) : g.country;
        auto& cell = buckets[name][g.tweet.posted_at];
        for (int t = 0; t < kNumTones; ++t)
            if (g.tones.test(static_cast<ToneLabel>(t))) ++cell[static_cast<std::size_t>(t)];
        if (!any || g.tweet.posted_at < first) first = g.tweet.posted_at;
        if (!any || last < g.tweet.posted_at) last = g.tweet.posted_at;
        any = true;
    }
    if (!any) return {};

    std::vector<SeriesRow> out;
    static constexpr std::array<std::int64_t, kNumTones> kZero{};
    for (const auto& [name, by_day] : buckets) {
        for (Date d = first;; d = next_day(d)) {
            auto it = by_day.find(d);
            const auto& cell = it == by_day.end() ? kZero : it->second;
            for (int t = 0; t < kNumTones; ++t)
                out.push_back(
                    {name, d, static_cast<ToneLabel>(t), cell[static_cast<std::size_t>(t)]});
            if (d == last) break;
        }
    }
    return out;
}

void write_counts_csv(std::ostream& out, const CountryCounts& counts) {
    std::vector<std::string> row = {"country", "total"};
    for (auto name : kToneNames) row.emplace_back(name);
    write_csv_row(out, row);
    for (const auto& [name, c] : counts) {
        row = {name, std::to_string(c.total_tweets)};
        for (std::int64_t n : c.tone_counts) row.push_back(std::to_string(n));
        write_csv_row(out, row);
    }
}

void write_indicators_csv(std::ostream& out, std::span<const IndicatorRow> rows) {
    std::vector<std::string> row = {"country",   "total",     "joy",
                                    "sadness",   "stated_hi", "stated_si",
                                    "joy_sadness_ratio", "sadness_joy_ratio"};
    write_csv_row(out, row);
    for (const auto& r : rows) {
        row = {r.country,
               std::to_string(r.total_tweets),
               std::to_string(r.joy_count),
               std::to_string(r.sadness_count),
               fmt_double(r.stated_hi),
               fmt_double(r.stated_si),
               r.joy_sadness_ratio ? fmt_double(*r.joy_sadness_ratio) : std::string{},
               r.sadness_joy_ratio ? fmt_double(*r.sadness_joy_ratio) : std::string{}};
        write_csv_row(out, row);
    }
}

void write_ranking_csv(std::ostream& out, std::span<const IndicatorRow> ranked,
                       IndicatorKey key) {
    std::vector<std::string> row = {"rank", "country", "total", "joy", "sadness",
                                    std::string(indicator_key_name(key))};
    write_csv_row(out, row);
    std::int64_t rank = 0;
    for (const auto& r : ranked) {
        auto value = indicator_value(r, key);
        row = {std::to_string(++rank),
               r.country,
               std::to_string(r.total_tweets),
               std::to_string(r.joy_count),
               std::to_string(r.sadness_count),
               value ? fmt_double(*value) : std::string{}};
        write_csv_row(out, row);
    }
}

void write_series_csv(std::ostream& out, std::span<const SeriesRow> series) {
    std::vector<std::string> row = {"country", "date", "tone", "count"};
    write_csv_row(out, row);
    for (const auto& s : series) {
        row = {s.country, date_string(s.date), std::string(tone_name(s.tone)),
               std::to_string(s.count)};
        write_csv_row(out, row);
    }
}

}  // namespace tonepipe
