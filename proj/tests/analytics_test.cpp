#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <sstream>

#include "test_util.hpp"
#include "tonepipe/analytics.hpp"
#include "tonepipe/rng.hpp"

using namespace tonepipe;
using testutil::make_tweet;

namespace {

GeoTaggedTweet tagged_tweet(std::string id, std::string country,
                            std::initializer_list<ToneLabel> tones,
                            std::string date = "2020-03-25") {
    GeoTaggedTweet g{make_tweet(std::move(id), "x", std::move(date)), {}, std::move(country)};
    for (auto t : tones) g.tones.set(t);
    return g;
}

std::vector<GeoTaggedTweet> random_tagged(int n, std::mt19937_64& rng) {
    const std::vector<std::string> countries = {"Spain", "Japan", "Kenya", "Norway"};
    std::vector<GeoTaggedTweet> out;
    for (int i = 0; i < n; ++i) {
        auto day = "2020-03-2" + std::to_string(5 + uniform_below(rng, 5));
        GeoTaggedTweet g{make_tweet("t" + std::to_string(i), "x", day), {},
                         countries[uniform_below(rng, countries.size())]};
        for (int t = 0; t < kNumTones; ++t)
            if (uniform_unit(rng) < 0.3) g.tones.set(static_cast<ToneLabel>(t));
        out.push_back(g);
    }
    return out;
}

CountryToneCounts counts_of(std::string country, std::int64_t total, std::int64_t joy,
                            std::int64_t sadness) {
    CountryToneCounts c;
    c.country = std::move(country);
    c.total_tweets = total;
    c.tone_counts[static_cast<int>(ToneLabel::kJoy)] = joy;
    c.tone_counts[static_cast<int>(ToneLabel::kSadness)] = sadness;
    return c;
}

}  // namespace

TEST_CASE("aggregate counts tweets once and tones per label") {
    std::vector<GeoTaggedTweet> tagged = {
        tagged_tweet("a", "Spain", {ToneLabel::kJoy, ToneLabel::kAnalytical})};
    auto counts = aggregate(tagged);
    REQUIRE(counts.size() == 1);
    const auto& spain = counts.at("Spain");
    CHECK(spain.total_tweets == 1);
    CHECK(spain.tone_counts[static_cast<int>(ToneLabel::kJoy)] == 1);
    CHECK(spain.tone_counts[static_cast<int>(ToneLabel::kAnalytical)] == 1);
    CHECK(spain.tone_counts[static_cast<int>(ToneLabel::kFear)] == 0);

    CHECK(aggregate({}).empty());

    // Zero-tone tweets still count toward the total.
    std::vector<GeoTaggedTweet> with_empty = {tagged_tweet("a", "Spain", {ToneLabel::kJoy}),
                                              tagged_tweet("b", "Spain", {})};
    auto counts2 = aggregate(with_empty);
    CHECK(counts2.at("Spain").total_tweets == 2);
    CHECK(counts2.at("Spain").tone_counts[static_cast<int>(ToneLabel::kJoy)] == 1);
}

TEST_CASE("sharded aggregation merged equals whole-input aggregation") {
    std::mt19937_64 rng(9);
    auto tagged = random_tagged(20, rng);

    auto whole = aggregate(tagged);
    auto first = aggregate(std::span(tagged).subspan(0, 11));
    auto second = aggregate(std::span(tagged).subspan(11));
    merge_counts(first, second);

    REQUIRE(first.size() == whole.size());
    for (const auto& [country, c] : whole) {
        const auto& m = first.at(country);
        CHECK(m.total_tweets == c.total_tweets);
        CHECK(m.tone_counts == c.tone_counts);
    }
}

TEST_CASE("merging random 4-way partitions is exact") {
    std::mt19937_64 rng(10);
    auto tagged = random_tagged(60, rng);
    auto whole = aggregate(tagged);

    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::vector<GeoTaggedTweet>> shards(4);
        for (const auto& g : tagged) shards[uniform_below(rng, 4)].push_back(g);
        CountryCounts merged;
        for (const auto& shard : shards) merge_counts(merged, aggregate(shard));

        REQUIRE(merged.size() == whole.size());
        for (const auto& [country, c] : whole) {
            CHECK(merged.at(country).total_tweets == c.total_tweets);
            CHECK(merged.at(country).tone_counts == c.tone_counts);
        }
    }
}

TEST_CASE("tone_histogram sums across countries") {
    std::vector<GeoTaggedTweet> tagged = {
        tagged_tweet("a", "Spain", {ToneLabel::kJoy}),
        tagged_tweet("b", "Japan", {ToneLabel::kJoy, ToneLabel::kFear}),
        tagged_tweet("c", "Japan", {})};
    auto hist = tone_histogram(aggregate(tagged));
    CHECK(hist[static_cast<int>(ToneLabel::kJoy)] == 2);
    CHECK(hist[static_cast<int>(ToneLabel::kFear)] == 1);
    CHECK(hist[static_cast<int>(ToneLabel::kSadness)] == 0);
}

TEST_CASE("indicators reproduce the published ratio examples") {
    auto spain = indicators(counts_of("Spain", 600, 417, 90));
    REQUIRE(spain.joy_sadness_ratio.has_value());
    CHECK(std::abs(*spain.joy_sadness_ratio - 4.63) <= 0.01);

    auto botswana = indicators(counts_of("Botswana", 100, 52, 48));
    REQUIRE(botswana.sadness_joy_ratio.has_value());
    CHECK(std::abs(*botswana.sadness_joy_ratio - 0.92) <= 0.01);
}

TEST_CASE("indicators stated rates and degenerate denominators") {
    auto row = indicators(counts_of("X", 10, 5, 2));
    CHECK(row.stated_hi == 0.5);
    CHECK(row.stated_si == 0.2);
    CHECK(row.joy_count == 5);
    CHECK(row.sadness_count == 2);

    // sadness = 0: the joy/sadness ratio is undefined, sadness/joy is 0.
    auto no_sadness = indicators(counts_of("Y", 10, 5, 0));
    CHECK_FALSE(no_sadness.joy_sadness_ratio.has_value());
    REQUIRE(no_sadness.sadness_joy_ratio.has_value());
    CHECK(*no_sadness.sadness_joy_ratio == 0.0);

    auto neither = indicators(counts_of("Z", 10, 0, 0));
    CHECK_FALSE(neither.joy_sadness_ratio.has_value());
    CHECK_FALSE(neither.sadness_joy_ratio.has_value());

    CHECK_THROWS_AS(indicators(counts_of("W", 0, 0, 0)), std::runtime_error);
}

TEST_CASE("indicator keys parse and select") {
    for (auto key : {IndicatorKey::kStatedHi, IndicatorKey::kStatedSi,
                     IndicatorKey::kJoySadnessRatio, IndicatorKey::kSadnessJoyRatio})
        CHECK(parse_indicator_key(indicator_key_name(key)) == key);
    CHECK_FALSE(parse_indicator_key("nonsense").has_value());

    auto row = indicators(counts_of("X", 10, 5, 2));
    CHECK(indicator_value(row, IndicatorKey::kStatedHi) == 0.5);
    CHECK(indicator_value(row, IndicatorKey::kJoySadnessRatio) == 2.5);
}

TEST_CASE("rank_countries sorts by key with alphabetical ties") {
    std::vector<IndicatorRow> rows = {
        indicators(counts_of("Bravo", 200, 80, 40)),   // ratio 2.0
        indicators(counts_of("Alpha", 200, 100, 25)),  // ratio 4.0
        indicators(counts_of("Delta", 200, 60, 30)),   // ratio 2.0, ties with Bravo
        indicators(counts_of("Echo", 50, 49, 1)),      // below min_total
        indicators(counts_of("Foxtrot", 200, 10, 0)),  // key undefined
    };
    auto ranked = rank_countries(rows, IndicatorKey::kJoySadnessRatio, 100, 10);
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].country == "Alpha");
    CHECK(ranked[1].country == "Bravo");  // tie with Delta broken alphabetically
    CHECK(ranked[2].country == "Delta");

    CHECK(rank_countries(rows, IndicatorKey::kJoySadnessRatio, 1000, 10).empty());
    CHECK(rank_countries(rows, IndicatorKey::kJoySadnessRatio, 100, 2).size() == 2);
    CHECK_THROWS_AS(rank_countries(rows, IndicatorKey::kJoySadnessRatio, 100, 0),
                    std::runtime_error);
}

TEST_CASE("temporal series without a filter is one global series") {
    std::vector<GeoTaggedTweet> tagged = {
        tagged_tweet("a", "Spain", {ToneLabel::kJoy}, "2020-03-25")};
    auto series = temporal_series(tagged, std::nullopt);
    REQUIRE(series.size() == kNumTones);
    for (const auto& row : series) {
        CHECK(row.country == kGlobalSeriesName);
        CHECK(date_string(row.date) == "2020-03-25");
        CHECK(row.count == (row.tone == ToneLabel::kJoy ? 1 : 0));
    }
}

TEST_CASE("temporal series is dense across gap days") {
    std::vector<GeoTaggedTweet> tagged = {
        tagged_tweet("a", "Spain", {ToneLabel::kJoy}, "2020-03-25"),
        tagged_tweet("b", "Spain", {ToneLabel::kFear}, "2020-03-27")};
    auto series = temporal_series(tagged, std::nullopt);
    REQUIRE(series.size() == 3 * kNumTones);  // 25th, 26th, 27th

    std::map<std::string, std::int64_t> day_totals;
    for (const auto& row : series) day_totals[date_string(row.date)] += row.count;
    CHECK(day_totals.at("2020-03-25") == 1);
    CHECK(day_totals.at("2020-03-26") == 0);  // gap day present, all zero
    CHECK(day_totals.at("2020-03-27") == 1);
}

TEST_CASE("temporal series respects the country filter on a shared axis") {
    std::vector<GeoTaggedTweet> tagged = {
        tagged_tweet("a", "Spain", {ToneLabel::kJoy}, "2020-03-25"),
        tagged_tweet("b", "Japan", {ToneLabel::kFear}, "2020-03-26"),
        tagged_tweet("c", "Kenya", {ToneLabel::kAnger}, "2020-03-27")};
    auto series = temporal_series(tagged, std::vector<std::string>{"Japan", "Spain"});

    // Two countries, each dense over 25th..26th (the filtered range).
    REQUIRE(series.size() == 2 * 2 * kNumTones);
    std::set<std::string> names;
    for (const auto& row : series) names.insert(row.country);
    CHECK(names == std::set<std::string>{"Japan", "Spain"});

    // Ordered (country, date, tone index).
    for (std::size_t i = 1; i < series.size(); ++i) {
        auto key = [](const SeriesRow& r) {
            return std::tuple(r.country, std::chrono::sys_days(r.date).time_since_epoch().count(),
                              static_cast<int>(r.tone));
        };
        CHECK(key(series[i - 1]) < key(series[i]));
    }

    CHECK(temporal_series({}, std::nullopt).empty());
}

TEST_CASE("summing a series over dates reproduces the aggregate") {
    std::mt19937_64 rng(12);
    auto tagged = random_tagged(40, rng);
    auto counts = aggregate(tagged);

    std::vector<std::string> all_countries;
    for (const auto& [name, c] : counts) all_countries.push_back(name);
    auto series = temporal_series(tagged, all_countries);

    std::map<std::pair<std::string, int>, std::int64_t> summed;
    for (const auto& row : series) summed[{row.country, static_cast<int>(row.tone)}] += row.count;
    for (const auto& [name, c] : counts)
        for (int t = 0; t < kNumTones; ++t)
            CHECK(summed[{name, t}] == c.tone_counts[static_cast<std::size_t>(t)]);
}

TEST_CASE("labeled tone multisets match the aggregate histogram") {
    // Cross-module consistency: wrapping labeled examples as tagged tweets
    // and aggregating yields exactly the per-tone label counts.
    std::mt19937_64 rng(13);
    std::array<std::int64_t, kNumTones> direct{};
    std::vector<GeoTaggedTweet> tagged;
    for (int i = 0; i < 50; ++i) {
        GeoTaggedTweet g{make_tweet("t" + std::to_string(i), "x"), {}, "Anywhere"};
        for (int t = 0; t < kNumTones; ++t)
            if (uniform_unit(rng) < 0.35) {
                g.tones.set(static_cast<ToneLabel>(t));
                ++direct[static_cast<std::size_t>(t)];
            }
        tagged.push_back(g);
    }
    CHECK(tone_histogram(aggregate(tagged)) == direct);
}

TEST_CASE("report csvs have stable headers and blank absent ratios") {
    std::vector<GeoTaggedTweet> tagged = {
        tagged_tweet("a", "Spain", {ToneLabel::kJoy}),
        tagged_tweet("b", "Japan", {})};
    auto counts = aggregate(tagged);

    std::ostringstream counts_out;
    write_counts_csv(counts_out, counts);
    CHECK(counts_out.str() ==
          "country,total,confident,anger,fear,joy,sadness,analytical,tentative\n"
          "Japan,1,0,0,0,0,0,0,0\n"
          "Spain,1,0,0,0,1,0,0,0\n");

    std::vector<IndicatorRow> rows = {indicators(counts.at("Japan")),
                                      indicators(counts.at("Spain"))};
    std::ostringstream ind_out;
    write_indicators_csv(ind_out, rows);
    CHECK(ind_out.str() ==
          "country,total,joy,sadness,stated_hi,stated_si,joy_sadness_ratio,sadness_joy_ratio\n"
          "Japan,1,0,0,0,0,,\n"
          "Spain,1,1,0,1,0,,0\n");

    auto ranked = rank_countries(rows, IndicatorKey::kStatedHi, 1, 10);
    std::ostringstream rank_out;
    write_ranking_csv(rank_out, ranked, IndicatorKey::kStatedHi);
    CHECK(rank_out.str() ==
          "rank,country,total,joy,sadness,stated_hi\n"
          "1,Spain,1,1,0,1\n"
          "2,Japan,1,0,0,0\n");

    auto series = temporal_series(tagged, std::nullopt);
    std::ostringstream series_out;
    write_series_csv(series_out, series);
    auto text = series_out.str();
    CHECK(text.rfind("country,date,tone,count\n", 0) == 0);
    CHECK(text.find("ALL,2020-03-25,joy,1\n") != std::string::npos);
}
