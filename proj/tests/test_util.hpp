#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <string_view>

#include "tonepipe/corpus.hpp"

// Paths baked in by the build so tests run from any working directory.
#ifndef TONEPIPE_FIXTURE_DIR
#error "TONEPIPE_FIXTURE_DIR must be defined by the build"
#endif
#ifndef TONEPIPE_DATA_DIR
#error "TONEPIPE_DATA_DIR must be defined by the build"
#endif

namespace testutil {

inline std::filesystem::path fixture_path(std::string_view name) {
    return std::filesystem::path(TONEPIPE_FIXTURE_DIR) / name;
}

inline std::filesystem::path data_path(std::string_view name) {
    return std::filesystem::path(TONEPIPE_DATA_DIR) / name;
}

// Scratch directory removed on scope exit.
class TempDir {
  public:
    explicit TempDir(std::string_view tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                (std::string("tonepipe_") + std::string(tag) + "_" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path file(std::string_view name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, std::string_view content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
}

inline tonepipe::TweetRecord make_tweet(std::string id, std::string text,
                                        std::string date = "2020-03-25",
                                        std::int64_t retweets = 2,
                                        std::optional<std::string> location = std::nullopt) {
    tonepipe::TweetRecord t;
    t.tweet_id = std::move(id);
    t.user_id = "u1";
    t.text = std::move(text);
    t.retweet_count = retweets;
    t.followers = 100;
    t.location_text = std::move(location);
    t.posted_at = *tonepipe::parse_date(date);
    return t;
}

}  // namespace testutil
