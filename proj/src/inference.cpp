#include "tonepipe/inference.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "tonepipe/csv.hpp"
#include "tonepipe/textprep.hpp"

namespace tonepipe {

ToneVector assign_tones(const ProbVector& probs, double threshold) {
    ToneVector tones;
    for (int i = 0; i < kNumTones; ++i)
        if (probs[i] > threshold) tones.set(static_cast<ToneLabel>(i));
    return tones;
}

void predict_stream(const ModelParams& params, const Vocabulary& vocab,
                    std::span<const TweetRecord> tweets, std::int64_t batch_size,
                    double threshold, const std::function<void(const TonePrediction&)>& sink) {
    if (static_cast<std::int64_t>(vocab.size()) != params.config.vocab_size)
        throw std::runtime_error("vocabulary size " + std::to_string(vocab.size()) +
                                 " does not match checkpoint vocab_size " +
                                 std::to_string(params.config.vocab_size));
    if (batch_size < 1) throw std::runtime_error("batch_size must be >= 1");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::runtime_error("threshold must be in (0, 1)");

    const auto max_len = static_cast<std::size_t>(params.config.max_len);
    std::vector<TokenSequence> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));

    std::size_t next = 0;
    while (next < tweets.size()) {
        const std::size_t count =
            std::min(static_cast<std::size_t>(batch_size), tweets.size() - next);
        batch.clear();
        for (std::size_t i = 0; i < count; ++i)
            batch.push_back(encode(tweets[next + i].text, vocab, max_len));

        const MatrixXd probs = forward(params, batch);
        for (std::size_t i = 0; i < count; ++i) {
            TonePrediction p;
            p.tweet_id = tweets[next + i].tweet_id;
            p.probs = prob_row(probs, static_cast<Eigen::Index>(i));
            p.tones = assign_tones(p.probs, threshold);
            sink(p);
        }
        next += count;
    }
}

std::vector<TonePrediction> predict(const ModelParams& params, const Vocabulary& vocab,
                                    std::span<const TweetRecord> tweets, std::int64_t batch_size,
                                    double threshold) {
    std::vector<TonePrediction> out;
    out.reserve(tweets.size());
    predict_stream(params, vocab, tweets, batch_size, threshold,
                   [&](const TonePrediction& p) { out.push_back(p); });
    return out;
}

std::vector<std::string> prediction_csv_header() {
    std::vector<std::string> header = {"tweet_id"};
    for (auto name : kToneNames) header.push_back("p_" + std::string(name));
    header.push_back("tone_list");
    return header;
}

void write_prediction_row(std::ostream& out, const TonePrediction& p) {
    std::vector<std::string> row;
    row.reserve(kNumTones + 2);
    row.push_back(p.tweet_id);
    for (double v : p.probs) row.push_back(fmt_double(v));
    row.push_back(tone_list_string(p.tones));
    write_csv_row(out, row);
}

std::vector<TonePrediction> read_predictions_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open predictions file: " + path.string());

    CsvReader reader(in);
    std::vector<std::string> fields;
    const auto expected = prediction_csv_header();
    if (!reader.next_row(fields) || fields != expected)
        throw std::runtime_error("bad predictions header in " + path.string());

    std::vector<TonePrediction> out;
    std::unordered_set<std::string> seen;
    while (reader.next_row(fields)) {
        if (fields.size() != expected.size())
            throw std::runtime_error("wrong field count at line " + std::to_string(reader.line()) +
                                     " in " + path.string());
        TonePrediction p;
        p.tweet_id = fields[0];
        if (!seen.insert(p.tweet_id).second)
            throw std::runtime_error("duplicate tweet_id '" + p.tweet_id + "' in " +
                                     path.string());
        for (int i = 0; i < kNumTones; ++i) {
            const std::string& s = fields[static_cast<std::size_t>(i) + 1];
            char* end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || end != s.c_str() + s.size() || !(v >= 0.0 && v <= 1.0))
                throw std::runtime_error("bad probability '" + s + "' at line " +
                                         std::to_string(reader.line()) + " in " + path.string());
            p.probs[static_cast<std::size_t>(i)] = v;
        }
        p.tones = parse_tone_list(fields.back());
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace tonepipe
