#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tonepipe/date.hpp"
#include "tonepipe/tones.hpp"

namespace tonepipe {

struct TweetRecord {
    std::string tweet_id;
    std::string user_id;
    std::string text;
    std::int64_t retweet_count = 0;
    std::int64_t followers = 0;
    std::optional<std::string> location_text;
    Date posted_at{};
};

struct LabeledExample {
    TweetRecord tweet;
    ToneVector labels;
};

enum class CorpusFormat { kCsv, kJsonl };

// Row-level defects are quarantined here instead of aborting the load;
// scraped tweet data is dirty and silent drops would corrupt tone counts.
struct RejectedRow {
    std::size_t row = 0;  // 1-based line number in the source file
    std::string reason;
};

struct LoadResult {
    std::vector<TweetRecord> records;
    std::vector<RejectedRow> rejects;
};

// Columns/keys: tweet_id,user_id,text,retweet_count,followers,location_text,
// posted_at (ISO date). Missing file or a missing CSV column is an error;
// malformed rows (empty id, bad date, negative counts, duplicate id, ...)
// land in `rejects` with their line number.
LoadResult load_tweets(const std::filesystem::path& path, CorpusFormat format);

// JSON-lines, one {"row": n, "reason": "..."} object per reject.
void write_rejects_report(std::ostream& out, std::span<const RejectedRow> rejects);

// Keeps records with retweet_count >= min_retweets, preserving order.
// The default reproduces the strict "retweet count > 1" corpus filter.
std::vector<TweetRecord> filter_quality(std::span<const TweetRecord> tweets,
                                        std::int64_t min_retweets = 2);

// Uniform per-day subsample without replacement: each posting day keeps
// min(per_day, day size) tweets. Output sorted by (posted_at, tweet_id) and
// fully determined by (input multiset, per_day, seed).
std::vector<TweetRecord> sample_per_day(std::span<const TweetRecord> tweets,
                                        std::size_t per_day, std::uint64_t seed);

struct JoinResult {
    std::vector<LabeledExample> examples;
    std::size_t unlabeled_tweets = 0;   // tweets with no entry in the label file
    std::size_t unmatched_labels = 0;   // label entries whose tweet_id was absent
};

// Label file is JSON-lines: {"tweet_id": "...", "tones": ["joy", ...]}.
// Inner join on tweet_id, in tweet order. Unknown tone names and duplicate
// tweet_ids in the label file are errors, not skips.
JoinResult join_labels(std::span<const TweetRecord> tweets,
                       const std::filesystem::path& labels_path);

// Prepared-dataset CSV: the tweet columns plus a trailing "tones" column
// (semicolon-joined tone names).
void write_labeled_csv(std::ostream& out, std::span<const LabeledExample> examples);
std::vector<LabeledExample> read_labeled_csv(const std::filesystem::path& path);

std::vector<std::string> tweet_csv_header();
std::vector<std::string> tweet_csv_row(const TweetRecord& t);

}  // namespace tonepipe
