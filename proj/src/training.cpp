#include "tonepipe/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "tonepipe/csv.hpp"
#include "tonepipe/metrics.hpp"
#include "tonepipe/rng.hpp"

namespace tonepipe {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::runtime_error("learning_rate must be > 0");
    if (sub_batch < 1) throw std::runtime_error("sub_batch must be >= 1");
    if (grad_accum_steps < 1) throw std::runtime_error("grad_accum_steps must be >= 1");
    if (epochs < 0) throw std::runtime_error("epochs must be >= 0");
    if (split_ratio <= 0.0 || split_ratio >= 1.0)
        throw std::runtime_error("split_ratio must be in (0, 1)");
    if (eval_every < 1) throw std::runtime_error("eval_every must be >= 1");
}

std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> split(
    std::span<const LabeledExample> examples, double ratio, std::uint64_t seed) {
    if (examples.empty()) throw std::runtime_error("cannot split an empty collection");
    if (ratio <= 0.0 || ratio >= 1.0) throw std::runtime_error("split ratio must be in (0, 1)");

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    shuffle(order, rng);

    const auto n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(examples.size())));
    if (n_train == 0 || n_train == examples.size())
        throw std::runtime_error("split would leave an empty partition");

    std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>> out;
    out.first.reserve(n_train);
    out.second.reserve(examples.size() - n_train);
    for (std::size_t i = 0; i < examples.size(); ++i) {
        (i < n_train ? out.first : out.second).push_back(examples[order[i]]);
    }
    return out;
}

AdamState AdamState::init(const ModelParams& params, double beta1, double beta2, double epsilon) {
    AdamState s;
    s.m = zeros_like(params);
    s.v = zeros_like(params);
    s.t = 0;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
}

namespace {

// Flat elementwise views of every trainable tensor, in canonical order, so
// params, grads and the moment accumulators can be zipped.
std::vector<Eigen::Map<Eigen::ArrayXd>> tensor_maps(ModelParams& p) {
    std::vector<Eigen::Map<Eigen::ArrayXd>> list;
    for_each_tensor(p, [&](const std::string&, auto& t) {
        list.push_back(Eigen::Map<Eigen::ArrayXd>(t.data(), t.size()));
    });
    return list;
}

}  // namespace

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr) {
    for_each_tensor(grads, [](const std::string& name, const auto& g) {
        if (!g.allFinite())
            throw std::runtime_error("non-finite gradient in tensor '" + name + "'");
    });

    state.t += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));

    auto g_list = tensor_maps(const_cast<ModelParams&>(grads));
    auto m_list = tensor_maps(state.m);
    auto v_list = tensor_maps(state.v);

    std::size_t idx = 0;
    for_each_tensor(params, [&](const std::string& name, auto& t) {
        auto p = Eigen::Map<Eigen::ArrayXd>(t.data(), t.size());
        auto& g = g_list[idx];
        auto& m = m_list[idx];
        auto& v = v_list[idx];
        ++idx;
        m = state.beta1 * m + (1.0 - state.beta1) * g;
        v = state.beta2 * v + (1.0 - state.beta2) * g.square();
        p -= lr * (m / bc1) / ((v / bc2).sqrt() + state.epsilon);
        if (!p.isFinite().all())
            throw std::runtime_error("non-finite parameter after update in tensor '" + name + "'");
    });
}

std::vector<TokenSequence> encode_examples(std::span<const LabeledExample> examples,
                                           const Vocabulary& vocab, std::int64_t max_len) {
    std::vector<TokenSequence> out;
    out.reserve(examples.size());
    for (const auto& ex : examples)
        out.push_back(encode(ex.tweet.text, vocab, static_cast<std::size_t>(max_len)));
    return out;
}

std::vector<ToneVector> example_targets(std::span<const LabeledExample> examples) {
    std::vector<ToneVector> out;
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back(ex.labels);
    return out;
}

std::pair<double, ModelParams> accumulate_window(const ModelParams& params,
                                                 std::span<const TokenSequence> inputs,
                                                 std::span<const ToneVector> targets,
                                                 std::int64_t sub_batch) {
    if (inputs.empty() || inputs.size() != targets.size())
        throw std::runtime_error("accumulation window needs matching inputs and targets");
    if (sub_batch < 1) throw std::runtime_error("sub_batch must be >= 1");

    ModelParams sum = zeros_like(params);
    auto sum_list = tensor_maps(sum);
    double loss_sum = 0.0;
    const std::size_t n = inputs.size();
    for (std::size_t off = 0; off < n; off += static_cast<std::size_t>(sub_batch)) {
        const std::size_t count = std::min(static_cast<std::size_t>(sub_batch), n - off);
        auto lg = loss_and_grads(params, inputs.subspan(off, count), targets.subspan(off, count));
        // Example-weighted so the window mean matches one big batch exactly.
        const double w = static_cast<double>(count);
        loss_sum += lg.loss * w;
        auto g_list = tensor_maps(lg.grads);
        for (std::size_t i = 0; i < sum_list.size(); ++i) sum_list[i] += w * g_list[i];
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    for_each_tensor(sum, [&](const std::string&, auto& t) { t *= inv_n; });
    return {loss_sum * inv_n, std::move(sum)};
}

std::pair<double, double> evaluate(const ModelParams& params,
                                   std::span<const TokenSequence> inputs,
                                   std::span<const ToneVector> targets,
                                   std::int64_t sub_batch) {
    if (inputs.empty()) throw std::runtime_error("cannot evaluate on an empty set");
    EvalBatch batch;
    batch.y.resize(inputs.size(), kNumTones);
    batch.f.resize(inputs.size(), kNumTones);
    const std::size_t n = inputs.size();
    for (std::size_t off = 0; off < n; off += static_cast<std::size_t>(sub_batch)) {
        const std::size_t count = std::min(static_cast<std::size_t>(sub_batch), n - off);
        MatrixXd probs = forward(params, inputs.subspan(off, count));
        batch.f.middleRows(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(count)) = probs;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < kNumTones; ++j) batch.y(static_cast<Eigen::Index>(i), j) = targets[i].bits[j];
    }
    return {eval_loss(batch), lrap(batch)};
}

std::pair<ModelParams, TrainHistory> train(ModelParams model,
                                           std::span<const LabeledExample> train_set,
                                           std::span<const LabeledExample> test_set,
                                           const TrainConfig& tcfg, const Vocabulary& vocab) {
    tcfg.validate();
    if (tcfg.epochs > 0 && train_set.empty())
        throw std::runtime_error("training set is empty");

    TrainHistory history;
    if (tcfg.epochs == 0) return {std::move(model), history};

    const auto max_len = model.config.max_len;
    auto train_inputs = encode_examples(train_set, vocab, max_len);
    auto train_targets = example_targets(train_set);
    auto test_inputs = encode_examples(test_set, vocab, max_len);
    auto test_targets = example_targets(test_set);

    AdamState adam = AdamState::init(model, tcfg.beta1, tcfg.beta2, tcfg.epsilon);
    std::mt19937_64 rng(tcfg.seed);
    const std::size_t n = train_inputs.size();
    const std::size_t window =
        static_cast<std::size_t>(tcfg.sub_batch) * static_cast<std::size_t>(tcfg.grad_accum_steps);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::int64_t step = 0;
    auto run_eval = [&] {
        if (test_inputs.empty() || history.steps.empty()) return;
        auto& rec = history.steps.back();
        if (rec.eval_loss) return;  // already evaluated at this step
        auto [el, lr_score] = evaluate(model, test_inputs, test_targets, tcfg.sub_batch);
        rec.eval_loss = el;
        rec.lrap = lr_score;
    };

    std::vector<TokenSequence> win_inputs;
    std::vector<ToneVector> win_targets;
    for (std::int64_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t off = 0; off < n; off += window) {
            const std::size_t count = std::min(window, n - off);
            win_inputs.clear();
            win_targets.clear();
            for (std::size_t i = 0; i < count; ++i) {
                win_inputs.push_back(train_inputs[order[off + i]]);
                win_targets.push_back(train_targets[order[off + i]]);
            }
            auto [loss, grads] = accumulate_window(model, win_inputs, win_targets, tcfg.sub_batch);
            adam_step(model, grads, adam, tcfg.learning_rate);
            ++step;
            history.steps.push_back({step, loss, std::nullopt, std::nullopt});
            if (step % tcfg.eval_every == 0) run_eval();
        }
        run_eval();
    }
    return {std::move(model), history};
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
    std::vector<std::string> row = {"step", "train_loss", "eval_loss", "lrap"};
    write_csv_row(out, row);
    for (const auto& rec : history.steps) {
        row = {std::to_string(rec.step), fmt_double(rec.train_loss),
               rec.eval_loss ? fmt_double(*rec.eval_loss) : std::string{},
               rec.lrap ? fmt_double(*rec.lrap) : std::string{}};
        write_csv_row(out, row);
    }
}

}  // namespace tonepipe
