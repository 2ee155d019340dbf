#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "test_util.hpp"
#include "tonepipe/metrics.hpp"
#include "tonepipe/rng.hpp"
#include "tonepipe/training.hpp"

using namespace tonepipe;
using testutil::make_tweet;

namespace {

ModelConfig tiny_config(std::uint64_t seed, std::int64_t vocab_size = 16) {
    ModelConfig cfg;
    cfg.vocab_size = vocab_size;
    cfg.d_model = 8;
    cfg.n_heads = 2;
    cfg.n_layers = 1;
    cfg.d_ffn = 16;
    cfg.max_len = 8;
    cfg.seed = seed;
    return cfg;
}

std::vector<LabeledExample> numbered_examples(int n) {
    std::vector<LabeledExample> out;
    for (int i = 0; i < n; ++i) {
        LabeledExample e{make_tweet("t" + std::to_string(i), "text " + std::to_string(i)), {}};
        if (i % 2 == 0) e.labels.set(ToneLabel::kJoy);
        out.push_back(e);
    }
    return out;
}

// Seven single-tone classes, each keyed to its own marker word; trivially
// separable, so training must be able to drive LRAP toward 1.
std::vector<LabeledExample> marker_examples(int n) {
    static const std::array<std::string, kNumTones> kMarkers = {
        "assured", "outrage", "dread", "sunshine", "sorrow", "statistics", "maybe"};
    std::vector<LabeledExample> out;
    for (int i = 0; i < n; ++i) {
        const int tone = i % kNumTones;
        LabeledExample e{make_tweet("m" + std::to_string(i),
                                    "covid news " + kMarkers[tone] + " " + kMarkers[tone]),
                         {}};
        e.labels.set(static_cast<ToneLabel>(tone));
        out.push_back(e);
    }
    return out;
}

Vocabulary vocab_for(const std::vector<LabeledExample>& examples) {
    std::vector<TweetRecord> tweets;
    for (const auto& e : examples) tweets.push_back(e.tweet);
    return build_vocab(tweets, 100, 1);
}

double max_param_diff(const ModelParams& a, const ModelParams& b) {
    double worst = 0.0;
    std::vector<const double*> bufs;
    auto& bm = const_cast<ModelParams&>(b);
    for_each_tensor(bm, [&](const std::string&, auto& t) { bufs.push_back(t.data()); });
    std::size_t i = 0;
    auto& am = const_cast<ModelParams&>(a);
    for_each_tensor(am, [&](const std::string&, auto& t) {
        for (Eigen::Index k = 0; k < t.size(); ++k)
            worst = std::max(worst, std::abs(t.data()[k] - bufs[i][k]));
        ++i;
    });
    return worst;
}

}  // namespace

TEST_CASE("train config validation") {
    TrainConfig ok;
    CHECK_NOTHROW(ok.validate());

    TrainConfig bad = ok;
    bad.learning_rate = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = ok;
    bad.sub_batch = 0;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = ok;
    bad.split_ratio = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
    bad = ok;
    bad.epochs = -1;
    CHECK_THROWS_AS(bad.validate(), std::runtime_error);
}

TEST_CASE("split: 80-20 on ten examples, floor boundary, determinism") {
    auto ten = numbered_examples(10);
    auto [train8, test2] = split(ten, 0.8, 5);
    CHECK(train8.size() == 8);
    CHECK(test2.size() == 2);

    auto [train9, test1] = split(ten, 0.99, 5);
    CHECK(train9.size() == 9);
    CHECK(test1.size() == 1);

    auto [a_train, a_test] = split(ten, 0.8, 123);
    auto [b_train, b_test] = split(ten, 0.8, 123);
    for (std::size_t i = 0; i < a_train.size(); ++i)
        CHECK(a_train[i].tweet.tweet_id == b_train[i].tweet.tweet_id);
    for (std::size_t i = 0; i < a_test.size(); ++i)
        CHECK(a_test[i].tweet.tweet_id == b_test[i].tweet.tweet_id);

    // Both sides together are exactly the input set.
    std::set<std::string> ids;
    for (const auto& e : a_train) ids.insert(e.tweet.tweet_id);
    for (const auto& e : a_test) ids.insert(e.tweet.tweet_id);
    CHECK(ids.size() == 10);
}

TEST_CASE("split refuses an empty partition") {
    auto one = numbered_examples(1);
    CHECK_THROWS_AS(split(one, 0.8, 1), std::runtime_error);
    auto ten = numbered_examples(10);
    CHECK_THROWS_AS(split(ten, 0.05, 1), std::runtime_error);  // floor gives 0 train
    CHECK_THROWS_AS(split({}, 0.8, 1), std::runtime_error);
}

TEST_CASE("adam_step: zero gradients leave parameters unchanged") {
    auto params = init_model(tiny_config(3));
    auto before = params;
    auto grads = zeros_like(params);
    auto state = AdamState::init(params, 0.9, 0.999, 1e-8);

    adam_step(params, grads, state, 0.1);
    CHECK(state.t == 1);
    CHECK(max_param_diff(params, before) == 0.0);
}

TEST_CASE("adam_step single-step hand value") {
    // Scalar case p=1, g=1, lr=0.1: m_hat=1, v_hat=1, so the update is
    // exactly 0.1/(1+1e-8) after bias correction at t=1.
    auto params = init_model(tiny_config(4));
    params.token_embedding(0, 0) = 1.0;
    const double untouched = params.token_embedding(0, 1);

    auto grads = zeros_like(params);
    grads.token_embedding(0, 0) = 1.0;
    auto state = AdamState::init(params, 0.9, 0.999, 1e-8);
    adam_step(params, grads, state, 0.1);

    const double expect = 1.0 - 0.1 / (std::sqrt(1.0) + 1e-8);
    CHECK(params.token_embedding(0, 0) == doctest::Approx(expect).epsilon(1e-15));
    CHECK(params.token_embedding(0, 1) == untouched);  // zero-grad coordinate
}

TEST_CASE("adam_step tracks a scalar oracle over repeated steps") {
    auto params = init_model(tiny_config(5));
    params.token_embedding(2, 3) = 0.7;
    auto grads = zeros_like(params);
    grads.token_embedding(2, 3) = 0.25;
    auto state = AdamState::init(params, 0.9, 0.999, 1e-8);

    oracle::ScalarAdam ref;
    double p = 0.7;
    for (int step = 0; step < 7; ++step) {
        adam_step(params, grads, state, 0.05);
        p = ref.step(p, 0.25, 0.05);
        CHECK(std::abs(params.token_embedding(2, 3) - p) <= 1e-12);
    }
    CHECK(state.t == 7);
}

TEST_CASE("adam_step rejects non-finite gradients by tensor name") {
    auto params = init_model(tiny_config(6));
    auto grads = zeros_like(params);
    grads.layers[0].w_ffn1(0, 0) = std::nan("");
    auto state = AdamState::init(params, 0.9, 0.999, 1e-8);
    CHECK_THROWS_WITH_AS(adam_step(params, grads, state, 0.1),
                         "non-finite gradient in tensor 'layer0.w_ffn1'", std::runtime_error);
}

TEST_CASE("accumulated window gradient equals the one-shot batch gradient") {
    auto cfg = tiny_config(7);
    auto params = init_model(cfg);
    auto examples = marker_examples(32);
    auto vocab = vocab_for(examples);
    auto inputs = encode_examples(examples, vocab, cfg.max_len);
    auto targets = example_targets(examples);

    auto [windowed_loss, windowed] = accumulate_window(params, inputs, targets, 2);
    auto one_shot = loss_and_grads(params, inputs, targets);

    CHECK(std::abs(windowed_loss - one_shot.loss) <= 1e-10);
    CHECK(max_param_diff(windowed, one_shot.grads) <= 1e-10);
}

TEST_CASE("a trailing partial window still averages per example") {
    auto cfg = tiny_config(8);
    auto params = init_model(cfg);
    auto examples = marker_examples(5);  // 2+2+1 sub-batches
    auto vocab = vocab_for(examples);
    auto inputs = encode_examples(examples, vocab, cfg.max_len);
    auto targets = example_targets(examples);

    auto [loss, grads] = accumulate_window(params, inputs, targets, 2);
    auto direct = loss_and_grads(params, inputs, targets);
    CHECK(std::abs(loss - direct.loss) <= 1e-10);
    CHECK(max_param_diff(grads, direct.grads) <= 1e-10);
}

TEST_CASE("train with zero epochs is a no-op") {
    auto examples = marker_examples(20);
    auto vocab = vocab_for(examples);
    auto [train_set, test_set] = split(examples, 0.8, 1);

    auto cfg = tiny_config(9, static_cast<std::int64_t>(vocab.size()));
    auto model = init_model(cfg);
    auto before = model;

    TrainConfig tcfg;
    tcfg.epochs = 0;
    auto [after, history] = train(std::move(model), train_set, test_set, tcfg, vocab);
    CHECK(max_param_diff(after, before) == 0.0);
    CHECK(history.steps.empty());
}

TEST_CASE("one optimizer update per 32 examples") {
    auto examples = marker_examples(64);
    auto vocab = vocab_for(examples);
    std::vector<LabeledExample> test_set = {examples[0], examples[1]};

    auto cfg = tiny_config(10, static_cast<std::int64_t>(vocab.size()));
    TrainConfig tcfg;
    tcfg.sub_batch = 2;
    tcfg.grad_accum_steps = 16;
    tcfg.epochs = 1;
    auto [model, history] = train(init_model(cfg), examples, test_set, tcfg, vocab);

    REQUIRE(history.steps.size() == 2);  // 64 examples / (2 x 16)
    CHECK(history.steps[0].step == 1);
    CHECK(history.steps[1].step == 2);
    for (const auto& rec : history.steps) {
        CHECK(std::isfinite(rec.train_loss));
        if (rec.lrap) {
            CHECK(*rec.lrap >= 0.0);
            CHECK(*rec.lrap <= 1.0);
        }
    }
    // The epoch-end record always evaluates.
    CHECK(history.steps.back().eval_loss.has_value());
    CHECK(history.steps.back().lrap.has_value());
}

TEST_CASE("training is bit-deterministic for fixed seeds") {
    auto examples = marker_examples(24);
    auto vocab = vocab_for(examples);
    auto [train_set, test_set] = split(examples, 0.8, 3);
    auto cfg = tiny_config(11, static_cast<std::int64_t>(vocab.size()));

    TrainConfig tcfg;
    tcfg.epochs = 2;
    tcfg.seed = 77;
    tcfg.eval_every = 2;

    auto [m1, h1] = train(init_model(cfg), train_set, test_set, tcfg, vocab);
    auto [m2, h2] = train(init_model(cfg), train_set, test_set, tcfg, vocab);
    CHECK(max_param_diff(m1, m2) == 0.0);
    REQUIRE(h1.steps.size() == h2.steps.size());
    for (std::size_t i = 0; i < h1.steps.size(); ++i) {
        CHECK(h1.steps[i].step == h2.steps[i].step);
        CHECK(h1.steps[i].train_loss == h2.steps[i].train_loss);
        CHECK(h1.steps[i].eval_loss == h2.steps[i].eval_loss);
        CHECK(h1.steps[i].lrap == h2.steps[i].lrap);
    }

    // A different shuffle seed must change the trajectory.
    TrainConfig other = tcfg;
    other.seed = 78;
    auto [m3, h3] = train(init_model(cfg), train_set, test_set, other, vocab);
    CHECK(max_param_diff(m1, m3) > 0.0);
}

TEST_CASE("history step indices are dense and strictly increasing") {
    auto examples = marker_examples(20);
    auto vocab = vocab_for(examples);
    auto [train_set, test_set] = split(examples, 0.8, 3);
    auto cfg = tiny_config(12, static_cast<std::int64_t>(vocab.size()));

    TrainConfig tcfg;
    tcfg.epochs = 3;
    tcfg.sub_batch = 2;
    tcfg.grad_accum_steps = 2;
    auto [model, history] = train(init_model(cfg), train_set, test_set, tcfg, vocab);

    REQUIRE_FALSE(history.steps.empty());
    for (std::size_t i = 0; i < history.steps.size(); ++i)
        CHECK(history.steps[i].step == static_cast<std::int64_t>(i + 1));
}

TEST_CASE("training fits the separable marker corpus") {
    auto examples = marker_examples(28);
    auto vocab = vocab_for(examples);
    auto cfg = tiny_config(13, static_cast<std::int64_t>(vocab.size()));

    TrainConfig tcfg;
    tcfg.epochs = 60;
    tcfg.learning_rate = 5e-3;
    tcfg.grad_accum_steps = 2;  // frequent updates on this small corpus
    tcfg.eval_every = 1000;
    std::vector<LabeledExample> test_set = {examples[0], examples[1], examples[2]};
    auto [model, history] = train(init_model(cfg), examples, test_set, tcfg, vocab);

    auto inputs = encode_examples(examples, vocab, cfg.max_len);
    auto targets = example_targets(examples);
    auto [loss, train_lrap] = evaluate(model, inputs, targets, 4);
    CHECK(train_lrap >= 0.99);
    CHECK(loss < 0.3);
}

TEST_CASE("evaluate agrees with the metrics module") {
    auto examples = marker_examples(10);
    auto vocab = vocab_for(examples);
    auto cfg = tiny_config(14, static_cast<std::int64_t>(vocab.size()));
    auto params = init_model(cfg);
    auto inputs = encode_examples(examples, vocab, cfg.max_len);
    auto targets = example_targets(examples);

    auto [loss, rank_score] = evaluate(params, inputs, targets, 3);

    EvalBatch b;
    b.y.resize(10, kNumTones);
    b.f = forward(params, inputs);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < kNumTones; ++j)
            b.y(i, j) = targets[static_cast<std::size_t>(i)].test(static_cast<ToneLabel>(j)) ? 1.0
                                                                                            : 0.0;
    CHECK(loss == doctest::Approx(eval_loss(b)).epsilon(1e-12));
    CHECK(rank_score == doctest::Approx(lrap(b)).epsilon(1e-12));
}

TEST_CASE("history csv renders blank eval columns when absent") {
    TrainHistory history;
    history.steps.push_back({1, 0.75, std::nullopt, std::nullopt});
    history.steps.push_back({2, 0.5, 0.625, 0.875});

    std::ostringstream out;
    write_history_csv(out, history);
    CHECK(out.str() ==
          "step,train_loss,eval_loss,lrap\n"
          "1,0.75,,\n"
          "2,0.5,0.625,0.875\n");
}
