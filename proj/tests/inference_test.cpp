#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "test_util.hpp"
#include "tonepipe/csv.hpp"
#include "tonepipe/inference.hpp"
#include "tonepipe/rng.hpp"

using namespace tonepipe;
using testutil::TempDir;
using testutil::make_tweet;

namespace {

struct Setup {
    ModelParams params;
    Vocabulary vocab;
    std::vector<TweetRecord> tweets;
};

Setup small_setup(std::uint64_t seed, int n_tweets) {
    std::vector<TweetRecord> tweets;
    const std::vector<std::string> words = {"covid", "news", "stay", "home", "sunshine",
                                            "sorrow", "dread", "maybe"};
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n_tweets; ++i) {
        std::string text;
        auto len = 1 + uniform_below(rng, 6);
        for (std::uint64_t k = 0; k < len; ++k)
            text += words[uniform_below(rng, words.size())] + " ";
        tweets.push_back(make_tweet("p" + std::to_string(i), text));
    }

    Setup s;
    s.vocab = build_vocab(tweets, 100, 1);
    ModelConfig cfg;
    cfg.vocab_size = static_cast<std::int64_t>(s.vocab.size());
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_layers = 1;
    cfg.d_ffn = 16;
    cfg.max_len = 8;
    cfg.seed = seed;
    s.params = init_model(cfg);
    s.tweets = std::move(tweets);
    return s;
}

ProbVector probs_of(std::initializer_list<double> values) {
    ProbVector p{};
    std::size_t i = 0;
    for (double v : values) p[i++] = v;
    return p;
}

}  // namespace

TEST_CASE("assign_tones uses a strict threshold") {
    auto all_half = probs_of({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5});
    CHECK(assign_tones(all_half).count() == 0);  // exactly 0.5 assigns nothing

    auto nudged = all_half;
    nudged[static_cast<int>(ToneLabel::kFear)] = 0.5 + 1e-9;
    auto v = assign_tones(nudged);
    CHECK(v.count() == 1);
    CHECK(v.test(ToneLabel::kFear));

    auto two = probs_of({0.9, 0.1, 0.1, 0.8, 0.1, 0.1, 0.1});
    auto tones = assign_tones(two);
    CHECK(tones.test(ToneLabel::kConfident));
    CHECK(tones.test(ToneLabel::kJoy));
    CHECK(tones.count() == 2);

    auto high_bar = probs_of({0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4});
    CHECK(assign_tones(high_bar, 0.99).count() == 0);
}

TEST_CASE("raising the threshold never adds tones") {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        ProbVector p{};
        for (auto& v : p) v = uniform_unit(rng);
        const double t1 = uniform_range(rng, 0.05, 0.95);
        const double t2 = uniform_range(rng, t1, 0.99);
        auto low = assign_tones(p, t1);
        auto high = assign_tones(p, t2);
        for (int i = 0; i < kNumTones; ++i) {
            if (high.test(static_cast<ToneLabel>(i)))
                CHECK(low.test(static_cast<ToneLabel>(i)));
        }
    }
}

TEST_CASE("re-thresholding the induced binary vector is a fixed point") {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 100; ++trial) {
        ProbVector p{};
        for (auto& v : p) v = uniform_unit(rng);
        const double t = uniform_range(rng, 0.05, 0.95);
        auto bits = assign_tones(p, t);
        ProbVector as_probs{};
        for (int i = 0; i < kNumTones; ++i)
            as_probs[i] = bits.test(static_cast<ToneLabel>(i)) ? 1.0 : 0.0;
        CHECK(assign_tones(as_probs, t) == bits);
    }
}

TEST_CASE("predict on empty input returns nothing") {
    auto s = small_setup(31, 4);
    CHECK(predict(s.params, s.vocab, {}, 8).empty());
}

TEST_CASE("predictions preserve input order and duplicate inputs agree") {
    auto s = small_setup(32, 6);
    s.tweets.push_back(s.tweets[2]);
    s.tweets.push_back(s.tweets[2]);

    auto out = predict(s.params, s.vocab, s.tweets, 3);
    REQUIRE(out.size() == s.tweets.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        CHECK(out[i].tweet_id == s.tweets[i].tweet_id);

    const auto& a = out[2];
    for (std::size_t dup : {out.size() - 2, out.size() - 1}) {
        for (int j = 0; j < kNumTones; ++j) CHECK(out[dup].probs[j] == a.probs[j]);
        CHECK(out[dup].tones == a.tones);
    }
}

TEST_CASE("batch size does not change predictions") {
    auto s = small_setup(33, 25);
    auto one = predict(s.params, s.vocab, s.tweets, 1);
    auto big = predict(s.params, s.vocab, s.tweets, 32);
    auto odd = predict(s.params, s.vocab, s.tweets, 7);
    REQUIRE(one.size() == big.size());
    REQUIRE(one.size() == odd.size());
    for (std::size_t i = 0; i < one.size(); ++i)
        for (int j = 0; j < kNumTones; ++j) {
            CHECK(std::abs(one[i].probs[j] - big[i].probs[j]) <= 1e-12);
            CHECK(std::abs(one[i].probs[j] - odd[i].probs[j]) <= 1e-12);
        }
}

TEST_CASE("predict_stream validates before any work") {
    auto s = small_setup(34, 3);
    int calls = 0;
    auto count_sink = [&](const TonePrediction&) { ++calls; };

    Vocabulary wrong = s.vocab;
    wrong.id_to_token.push_back("extra");
    wrong.token_to_id["extra"] = static_cast<std::int32_t>(wrong.id_to_token.size() - 1);
    CHECK_THROWS_AS(predict_stream(s.params, wrong, s.tweets, 8, 0.5, count_sink),
                    std::runtime_error);
    CHECK_THROWS_AS(predict_stream(s.params, s.vocab, s.tweets, 0, 0.5, count_sink),
                    std::runtime_error);
    CHECK_THROWS_AS(predict_stream(s.params, s.vocab, s.tweets, 8, 0.0, count_sink),
                    std::runtime_error);
    CHECK_THROWS_AS(predict_stream(s.params, s.vocab, s.tweets, 8, 1.0, count_sink),
                    std::runtime_error);
    CHECK(calls == 0);

    predict_stream(s.params, s.vocab, s.tweets, 8, 0.5, count_sink);
    CHECK(calls == 3);
}

TEST_CASE("prediction csv round-trips through a file") {
    auto s = small_setup(35, 10);
    auto preds = predict(s.params, s.vocab, s.tweets, 4);

    TempDir dir("pred");
    auto path = dir.file("predictions.csv");
    {
        std::ofstream out(path, std::ios::binary);
        write_csv_row(out, prediction_csv_header());
        for (const auto& p : preds) write_prediction_row(out, p);
    }

    auto loaded = read_predictions_csv(path);
    REQUIRE(loaded.size() == preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        CHECK(loaded[i].tweet_id == preds[i].tweet_id);
        for (int j = 0; j < kNumTones; ++j)
            CHECK(loaded[i].probs[j] == preds[i].probs[j]);  // fmt_double round-trips
        CHECK(loaded[i].tones == preds[i].tones);
    }
}

TEST_CASE("prediction csv reader validates its input") {
    TempDir dir("pred");

    auto bad_header = dir.file("bad_header.csv");
    testutil::write_text(bad_header, "tweet_id,oops\nx,1\n");
    CHECK_THROWS_AS(read_predictions_csv(bad_header), std::runtime_error);

    const std::string header =
        "tweet_id,p_confident,p_anger,p_fear,p_joy,p_sadness,p_analytical,p_tentative,tone_list\n";

    auto dup = dir.file("dup.csv");
    testutil::write_text(dup, header +
                                  "a,0.1,0.1,0.1,0.1,0.1,0.1,0.1,\n"
                                  "a,0.2,0.2,0.2,0.2,0.2,0.2,0.2,\n");
    CHECK_THROWS_AS(read_predictions_csv(dup), std::runtime_error);

    auto bad_prob = dir.file("bad_prob.csv");
    testutil::write_text(bad_prob, header + "a,1.5,0.1,0.1,0.1,0.1,0.1,0.1,\n");
    CHECK_THROWS_AS(read_predictions_csv(bad_prob), std::runtime_error);

    auto not_number = dir.file("nan.csv");
    testutil::write_text(not_number, header + "a,zero,0.1,0.1,0.1,0.1,0.1,0.1,\n");
    CHECK_THROWS_AS(read_predictions_csv(not_number), std::runtime_error);

    auto ok = dir.file("ok.csv");
    testutil::write_text(ok, header + "a,0.9,0.1,0.1,0.6,0.1,0.1,0.1,joy\n");
    auto rows = read_predictions_csv(ok);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].probs[static_cast<int>(ToneLabel::kConfident)] == 0.9);
    CHECK(rows[0].tones.test(ToneLabel::kJoy));
    CHECK(rows[0].tones.count() == 1);
}
