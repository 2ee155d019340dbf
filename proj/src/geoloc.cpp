#include "tonepipe/geoloc.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <stdexcept>

#include "tonepipe/csv.hpp"
#include "tonepipe/text.hpp"

namespace tonepipe {

namespace {

std::string_view trim_ascii(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

Gazetteer load_gazetteer(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open gazetteer: " + path.string());

    Gazetteer gz;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view v = trim_ascii(line);
        if (v.empty() || v.front() == '#') continue;
        const auto tab = v.find('\t');
        if (tab == std::string_view::npos)
            throw std::runtime_error("gazetteer line " + std::to_string(line_no) +
                                     ": expected alias<TAB>country");
        const std::string alias = normalize_location(v.substr(0, tab));
        const std::string country{trim_ascii(v.substr(tab + 1))};
        if (alias.empty() || country.empty())
            throw std::runtime_error("gazetteer line " + std::to_string(line_no) +
                                     ": empty alias or country");
        auto [it, inserted] = gz.entries.emplace(alias, country);
        if (!inserted && it->second != country)
            throw std::runtime_error("conflicting alias '" + alias + "': maps to both '" +
                                     it->second + "' and '" + country + "'");
        gz.countries.insert(country);
    }
    if (gz.entries.empty()) throw std::runtime_error("gazetteer is empty: " + path.string());
    return gz;
}

std::string normalize_location(std::string_view text) {
    const std::u32string cps = compose_nfc(decode_utf8(text));
    std::string out;
    bool pending_space = false;
    for (char32_t raw : cps) {
        const char32_t cp = to_lower(raw);
        if (is_whitespace(cp) || (is_punctuation(cp) && cp != U'-')) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        append_utf8(out, cp);
    }
    return out;
}

std::optional<std::string> resolve_location(std::string_view location_text, const Gazetteer& gz) {
    // Commas are split before normalization, which would erase them.
    std::vector<std::string_view> segments;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= location_text.size(); ++i) {
        if (i == location_text.size() || location_text[i] == ',') {
            segments.push_back(location_text.substr(start, i - start));
            start = i + 1;
        }
    }

    for (auto seg = segments.rbegin(); seg != segments.rend(); ++seg) {
        const std::string norm = normalize_location(*seg);
        if (norm.empty()) continue;

        std::vector<std::string_view> tokens;
        std::string_view rest = norm;
        while (!rest.empty()) {
            const auto space = rest.find(' ');
            tokens.push_back(rest.substr(0, space));
            rest = space == std::string_view::npos ? std::string_view{} : rest.substr(space + 1);
        }

        // Longest n-gram first; the full segment is the first candidate.
        for (std::size_t len = tokens.size(); len >= 1; --len) {
            for (std::size_t s = 0; s + len <= tokens.size(); ++s) {
                std::string candidate{tokens[s]};
                for (std::size_t i = 1; i < len; ++i) {
                    candidate.push_back(' ');
                    candidate += tokens[s + i];
                }
                auto hit = gz.entries.find(candidate);
                if (hit != gz.entries.end()) return hit->second;
            }
        }
    }
    return std::nullopt;
}

GeotagResult geotag(std::span<const TweetRecord> tweets, std::span<const ToneVector> tones,
                    const Gazetteer& gz) {
    if (tweets.size() != tones.size())
        throw std::runtime_error("geotag needs one tone vector per tweet");

    GeotagResult result;
    std::unordered_set<std::string> sampled;
    for (std::size_t i = 0; i < tweets.size(); ++i) {
        const TweetRecord& t = tweets[i];
        if (!t.location_text || trim_ascii(*t.location_text).empty()) {
            ++result.dropped_missing;
            continue;
        }
        auto country = resolve_location(*t.location_text, gz);
        if (!country) {
            ++result.dropped_unresolved;
            if (result.unresolved_samples.size() < kMaxUnresolvedSamples &&
                sampled.insert(*t.location_text).second)
                result.unresolved_samples.push_back(*t.location_text);
            continue;
        }
        result.tagged.push_back({t, tones[i], std::move(*country)});
    }
    return result;
}

void write_drop_report(std::ostream& out, std::size_t input_size, const GeotagResult& result) {
    nlohmann::json j;
    j["input"] = input_size;
    j["tagged"] = result.tagged.size();
    j["dropped_missing"] = result.dropped_missing;
    j["dropped_unresolved"] = result.dropped_unresolved;
    j["unresolved_samples"] = result.unresolved_samples;
    out << j.dump(2) << '\n';
}

void write_tagged_csv(std::ostream& out, std::span<const GeoTaggedTweet> tagged) {
    std::vector<std::string> row = tweet_csv_header();
    row.push_back("country");
    row.push_back("tones");
    write_csv_row(out, row);
    for (const auto& g : tagged) {
        row = tweet_csv_row(g.tweet);
        row.push_back(g.country);
        row.push_back(tone_list_string(g.tones));
        write_csv_row(out, row);
    }
}

std::vector<GeoTaggedTweet> read_tagged_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tagged file: " + path.string());

    CsvReader reader(in);
    std::vector<std::string> fields;
    std::vector<std::string> expected = tweet_csv_header();
    expected.push_back("country");
    expected.push_back("tones");
    if (!reader.next_row(fields) || fields != expected)
        throw std::runtime_error("bad tagged-tweet header in " + path.string());

    auto parse_count = [&](const std::string& s) {
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size() || v < 0)
            throw std::runtime_error("bad count '" + s + "' at line " +
                                     std::to_string(reader.line()) + " in " + path.string());
        return v;
    };

    std::vector<GeoTaggedTweet> out;
    while (reader.next_row(fields)) {
        if (fields.size() != expected.size())
            throw std::runtime_error("wrong field count at line " + std::to_string(reader.line()) +
                                     " in " + path.string());
        GeoTaggedTweet g;
        g.tweet.tweet_id = fields[0];
        g.tweet.user_id = fields[1];
        g.tweet.text = fields[2];
        g.tweet.retweet_count = parse_count(fields[3]);
        g.tweet.followers = parse_count(fields[4]);
        if (!fields[5].empty()) g.tweet.location_text = fields[5];
        auto date = parse_date(fields[6]);
        if (!date)
            throw std::runtime_error("bad date '" + fields[6] + "' at line " +
                                     std::to_string(reader.line()) + " in " + path.string());
        g.tweet.posted_at = *date;
        g.country = fields[7];
        g.tones = parse_tone_list(fields[8]);
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace tonepipe
