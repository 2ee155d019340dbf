#include "tonepipe/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "tonepipe/csv.hpp"
#include "tonepipe/rng.hpp"

namespace tonepipe {

namespace {

using nlohmann::json;

std::string trimmed(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

bool parse_count(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

// Field-level validation shared by both formats. Returns an empty string on
// success, otherwise the reject reason.
std::string build_record(std::string tweet_id, std::string user_id, std::string text,
                         std::string_view retweets_str, std::string_view followers_str,
                         std::string location, std::string_view date_str,
                         std::unordered_set<std::string>& seen_ids, TweetRecord& out) {
    if (tweet_id.empty()) return "empty tweet_id";
    if (seen_ids.contains(tweet_id)) return "duplicate tweet_id '" + tweet_id + "'";
    if (trimmed(text).empty()) return "empty text";
    std::int64_t retweets = 0;
    if (!parse_count(retweets_str, retweets))
        return "unparseable retweet_count '" + std::string(retweets_str) + "'";
    if (retweets < 0) return "negative retweet_count";
    std::int64_t followers = 0;
    if (!parse_count(followers_str, followers))
        return "unparseable followers '" + std::string(followers_str) + "'";
    if (followers < 0) return "negative followers";
    auto date = parse_date(date_str);
    if (!date) return "unparseable date in posted_at: '" + std::string(date_str) + "'";

    seen_ids.insert(tweet_id);
    out.tweet_id = std::move(tweet_id);
    out.user_id = std::move(user_id);
    out.text = std::move(text);
    out.retweet_count = retweets;
    out.followers = followers;
    std::string loc = trimmed(location);
    out.location_text = loc.empty() ? std::nullopt : std::optional<std::string>(std::move(loc));
    out.posted_at = *date;
    return {};
}

const std::vector<std::string> kColumns = {
    "tweet_id", "user_id", "text", "retweet_count", "followers", "location_text", "posted_at"};

LoadResult load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tweet file: " + path.string());
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) throw std::runtime_error("empty tweet file: " + path.string());

    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < row.size(); ++i) col[row[i]] = i;
    for (const auto& name : kColumns) {
        if (!col.contains(name))
            throw std::runtime_error("missing required column '" + name + "' in " + path.string());
    }
    const std::size_t n_cols = row.size();

    LoadResult result;
    std::unordered_set<std::string> seen_ids;
    while (reader.next_row(row)) {
        const std::size_t line = reader.line();
        if (row.size() != n_cols) {
            result.rejects.push_back({line, "expected " + std::to_string(n_cols) +
                                                " fields, got " + std::to_string(row.size())});
            continue;
        }
        TweetRecord rec;
        auto field = [&](const std::string& name) -> std::string& { return row[col.at(name)]; };
        std::string reason = build_record(
            std::move(field("tweet_id")), std::move(field("user_id")), std::move(field("text")),
            field("retweet_count"), field("followers"), std::move(field("location_text")),
            field("posted_at"), seen_ids, rec);
        if (!reason.empty()) {
            result.rejects.push_back({line, std::move(reason)});
        } else {
            result.records.push_back(std::move(rec));
        }
    }
    return result;
}

LoadResult load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tweet file: " + path.string());

    LoadResult result;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object()) {
            result.rejects.push_back({line_no, "invalid JSON object"});
            continue;
        }
        std::string missing;
        for (const auto& name : kColumns) {
            if (name != "location_text" && !obj.contains(name)) {
                missing = name;
                break;
            }
        }
        if (!missing.empty()) {
            result.rejects.push_back({line_no, "missing field " + missing});
            continue;
        }
        auto as_string = [&](const char* key) -> std::string {
            const auto& v = obj[key];
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
            return {};
        };
        auto count_string = [&](const char* key) -> std::string {
            const auto& v = obj[key];
            if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
            if (v.is_string()) return v.get<std::string>();
            return "?";
        };
        std::string location;
        if (obj.contains("location_text") && obj["location_text"].is_string())
            location = obj["location_text"].get<std::string>();

        TweetRecord rec;
        std::string reason =
            build_record(as_string("tweet_id"), as_string("user_id"), as_string("text"),
                         count_string("retweet_count"), count_string("followers"),
                         std::move(location), as_string("posted_at"), seen_ids, rec);
        if (!reason.empty()) {
            result.rejects.push_back({line_no, std::move(reason)});
        } else {
            result.records.push_back(std::move(rec));
        }
    }
    return result;
}

}  // namespace

LoadResult load_tweets(const std::filesystem::path& path, CorpusFormat format) {
    if (!std::filesystem::exists(path))
        throw std::runtime_error("tweet file does not exist: " + path.string());
    return format == CorpusFormat::kCsv ? load_csv(path) : load_jsonl(path);
}

void write_rejects_report(std::ostream& out, std::span<const RejectedRow> rejects) {
    for (const auto& r : rejects) {
        json obj{{"row", r.row}, {"reason", r.reason}};
        out << obj.dump() << '\n';
    }
}

std::vector<TweetRecord> filter_quality(std::span<const TweetRecord> tweets,
                                        std::int64_t min_retweets) {
    if (min_retweets < 0) throw std::runtime_error("min_retweets must be >= 0");
    std::vector<TweetRecord> kept;
    kept.reserve(tweets.size());
    for (const auto& t : tweets) {
        if (t.retweet_count >= min_retweets) kept.push_back(t);
    }
    return kept;
}

std::vector<TweetRecord> sample_per_day(std::span<const TweetRecord> tweets,
                                        std::size_t per_day, std::uint64_t seed) {
    if (per_day < 1) throw std::runtime_error("per_day must be >= 1");

    // Ordered by day, each group ordered by tweet_id, so the draw depends
    // only on the input multiset, not on file order.
    std::map<Date, std::vector<const TweetRecord*>> by_day;
    for (const auto& t : tweets) by_day[t.posted_at].push_back(&t);

    std::mt19937_64 rng(seed);
    std::vector<TweetRecord> out;
    for (auto& [day, group] : by_day) {
        std::sort(group.begin(), group.end(),
                  [](const TweetRecord* a, const TweetRecord* b) { return a->tweet_id < b->tweet_id; });
        auto picked = sample_indices(group.size(), per_day, rng);
        std::sort(picked.begin(), picked.end());
        for (auto i : picked) out.push_back(*group[i]);
    }
    return out;
}

JoinResult join_labels(std::span<const TweetRecord> tweets,
                       const std::filesystem::path& labels_path) {
    std::ifstream in(labels_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open label file: " + labels_path.string());

    std::unordered_map<std::string, ToneVector> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("tweet_id") ||
            !obj.contains("tones") || !obj["tones"].is_array()) {
            throw std::runtime_error("malformed label entry at line " + std::to_string(line_no) +
                                     " of " + labels_path.string());
        }
        std::string id = obj["tweet_id"].get<std::string>();
        if (labels.contains(id))
            throw std::runtime_error("duplicate tweet_id in label file: '" + id + "'");
        ToneVector tv;
        for (const auto& name : obj["tones"]) {
            auto tone = parse_tone(name.get<std::string>());
            if (!tone) throw std::runtime_error("unknown tone: " + name.get<std::string>());
            tv.set(*tone);
        }
        labels.emplace(std::move(id), tv);
    }

    JoinResult result;
    std::size_t matched = 0;
    for (const auto& t : tweets) {
        auto it = labels.find(t.tweet_id);
        if (it == labels.end()) {
            ++result.unlabeled_tweets;
            continue;
        }
        result.examples.push_back({t, it->second});
        ++matched;
    }
    result.unmatched_labels = labels.size() - matched;
    return result;
}

std::vector<std::string> tweet_csv_header() {
    return kColumns;
}

std::vector<std::string> tweet_csv_row(const TweetRecord& t) {
    return {t.tweet_id,
            t.user_id,
            t.text,
            std::to_string(t.retweet_count),
            std::to_string(t.followers),
            t.location_text.value_or(""),
            date_string(t.posted_at)};
}

void write_labeled_csv(std::ostream& out, std::span<const LabeledExample> examples) {
    auto header = tweet_csv_header();
    header.push_back("tones");
    write_csv_row(out, header);
    for (const auto& ex : examples) {
        auto row = tweet_csv_row(ex.tweet);
        row.push_back(tone_list_string(ex.labels));
        write_csv_row(out, row);
    }
}

std::vector<LabeledExample> read_labeled_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset: " + path.string());
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next_row(row)) throw std::runtime_error("empty dataset: " + path.string());

    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < row.size(); ++i) col[row[i]] = i;
    auto expected = tweet_csv_header();
    expected.push_back("tones");
    for (const auto& name : expected) {
        if (!col.contains(name))
            throw std::runtime_error("missing required column '" + name + "' in " + path.string());
    }

    std::vector<LabeledExample> examples;
    while (reader.next_row(row)) {
        const std::size_t line = reader.line();
        if (row.size() != expected.size())
            throw std::runtime_error("malformed dataset row at line " + std::to_string(line));
        LabeledExample ex;
        ex.tweet.tweet_id = row[col.at("tweet_id")];
        ex.tweet.user_id = row[col.at("user_id")];
        ex.tweet.text = row[col.at("text")];
        if (!parse_count(row[col.at("retweet_count")], ex.tweet.retweet_count) ||
            !parse_count(row[col.at("followers")], ex.tweet.followers)) {
            throw std::runtime_error("malformed count at line " + std::to_string(line));
        }
        std::string loc = trimmed(row[col.at("location_text")]);
        if (!loc.empty()) ex.tweet.location_text = std::move(loc);
        auto date = parse_date(row[col.at("posted_at")]);
        if (!date) throw std::runtime_error("malformed date at line " + std::to_string(line));
        ex.tweet.posted_at = *date;
        ex.labels = parse_tone_list(row[col.at("tones")]);
        examples.push_back(std::move(ex));
    }
    return examples;
}

}  // namespace tonepipe
