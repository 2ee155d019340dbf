#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tonepipe/corpus.hpp"
#include "tonepipe/neuralnet.hpp"

namespace tonepipe {

struct TonePrediction {
    std::string tweet_id;
    ProbVector probs{};
    ToneVector tones;  // probs thresholded
};

// Bit i set iff probs[i] > threshold, strictly: a probability of exactly 0.5
// assigns nothing at the default threshold. All-zero results are legal.
ToneVector assign_tones(const ProbVector& probs, double threshold = 0.5);

// Runs `tweets` through the model in batches of at most batch_size and hands
// each prediction to `sink` in input order. Memory stays bounded: only one
// batch of activations is alive at a time. Throws before any work if the
// vocabulary size and the checkpoint's vocab_size disagree, if batch_size < 1,
// or if threshold is outside (0, 1).
void predict_stream(const ModelParams& params, const Vocabulary& vocab,
                    std::span<const TweetRecord> tweets, std::int64_t batch_size,
                    double threshold, const std::function<void(const TonePrediction&)>& sink);

// predict_stream collected into a vector, for in-memory callers.
std::vector<TonePrediction> predict(const ModelParams& params, const Vocabulary& vocab,
                                    std::span<const TweetRecord> tweets, std::int64_t batch_size,
                                    double threshold = 0.5);

// Prediction CSV: tweet_id, one probability column per tone, then the
// thresholded tone list ("joy;analytical", empty when no tone passed).
std::vector<std::string> prediction_csv_header();
void write_prediction_row(std::ostream& out, const TonePrediction& p);
std::vector<TonePrediction> read_predictions_csv(const std::filesystem::path& path);

}  // namespace tonepipe
