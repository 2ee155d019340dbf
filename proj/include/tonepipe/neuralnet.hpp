#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tonepipe/textprep.hpp"
#include "tonepipe/tones.hpp"

namespace tonepipe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kLayerNormEps = 1e-5;

struct ModelConfig {
    std::int64_t vocab_size = 0;
    std::int64_t d_model = 64;
    std::int64_t n_heads = 4;
    std::int64_t n_layers = 2;
    std::int64_t d_ffn = 128;
    std::int64_t max_len = 64;
    std::int64_t n_labels = kNumTones;
    std::uint64_t seed = 0;

    // Throws unless d_model % n_heads == 0, n_labels == 7, max_len <= 250
    // and every dimension is positive.
    void validate() const;
};

// One encoder block: multi-head self-attention and a GELU feed-forward, each
// followed by a residual connection and layer norm.
struct LayerParams {
    MatrixXd w_q, w_k, w_v, w_o;     // d_model x d_model
    VectorXd b_q, b_k, b_v, b_o;     // d_model
    VectorXd ln1_gain, ln1_bias;     // d_model
    MatrixXd w_ffn1;                 // d_model x d_ffn
    VectorXd b_ffn1;                 // d_ffn
    MatrixXd w_ffn2;                 // d_ffn x d_model
    VectorXd b_ffn2;                 // d_model
    VectorXd ln2_gain, ln2_bias;     // d_model
};

struct ModelParams {
    ModelConfig config;
    MatrixXd token_embedding;        // vocab_size x d_model
    MatrixXd positional;             // max_len x d_model, fixed sinusoidal table
    std::vector<LayerParams> layers;
    MatrixXd w_head;                 // d_model x n_labels
    VectorXd b_head;                 // n_labels
};

// Visits every trainable tensor in a fixed canonical order (the positional
// table is excluded: it is not trained). The callback receives a stable
// tensor name and a reference, and must accept both MatrixXd and VectorXd.
template <class Params, class Fn>
void for_each_tensor(Params& p, Fn&& fn) {
    fn("token_embedding", p.token_embedding);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        fn(prefix + "w_q", layer.w_q);
        fn(prefix + "b_q", layer.b_q);
        fn(prefix + "w_k", layer.w_k);
        fn(prefix + "b_k", layer.b_k);
        fn(prefix + "w_v", layer.w_v);
        fn(prefix + "b_v", layer.b_v);
        fn(prefix + "w_o", layer.w_o);
        fn(prefix + "b_o", layer.b_o);
        fn(prefix + "ln1_gain", layer.ln1_gain);
        fn(prefix + "ln1_bias", layer.ln1_bias);
        fn(prefix + "w_ffn1", layer.w_ffn1);
        fn(prefix + "b_ffn1", layer.b_ffn1);
        fn(prefix + "w_ffn2", layer.w_ffn2);
        fn(prefix + "b_ffn2", layer.b_ffn2);
        fn(prefix + "ln2_gain", layer.ln2_gain);
        fn(prefix + "ln2_bias", layer.ln2_bias);
    }
    fn("w_head", p.w_head);
    fn("b_head", p.b_head);
}

// sin/cos position table: PE(p, 2i) = sin(p / 10000^(2i/d)), PE(p, 2i+1) = cos(...).
MatrixXd sinusoidal_positions(Eigen::Index max_len, Eigen::Index d_model);

// Weight matrices drawn uniformly from +-1/sqrt(fan_in) with a seeded
// generator; biases zero, layer-norm gains one. Identical seeds give
// bit-identical parameters.
ModelParams init_model(const ModelConfig& config);

// Same shapes as `like`, every trainable tensor zero (positional table kept).
ModelParams zeros_like(const ModelParams& like);

// Activations retained by forward() for the exact backward pass.
struct LayerCache {
    MatrixXd input;                  // max_len x d_model, block input
    MatrixXd q, k, v;                // max_len x d_model
    std::vector<MatrixXd> attn;      // per head: max_len x max_len softmax rows
    MatrixXd concat;                 // max_len x d_model, heads concatenated
    MatrixXd ln1_xhat;               // normalized pre-gain activations
    VectorXd ln1_invstd;
    MatrixXd ffn_input;              // max_len x d_model (post first layer norm)
    MatrixXd ffn_pre, ffn_act;       // max_len x d_ffn (pre/post GELU)
    MatrixXd ln2_xhat;
    VectorXd ln2_invstd;
};

struct SequenceCache {
    std::vector<LayerCache> layers;
    MatrixXd output;                 // max_len x d_model, final encoder state
};

struct ForwardCache {
    std::vector<SequenceCache> sequences;
    MatrixXd logits;                 // batch x n_labels
};

// Encodes each sequence and returns per-label sigmoid probabilities, one row
// per batch element. Padding positions are masked out of attention with an
// additive -inf before softmax, so pad tokens can never influence the output.
// Throws on a token id outside the embedding table or a wrong-length sequence.
MatrixXd forward(const ModelParams& params, std::span<const TokenSequence> batch,
                 ForwardCache* cache = nullptr);

inline ProbVector prob_row(const MatrixXd& probs, Eigen::Index row) {
    ProbVector p{};
    for (int j = 0; j < kNumTones; ++j) p[j] = probs(row, j);
    return p;
}

// Mean binary cross-entropy over batch x labels, evaluated in logit form,
// plus exact analytic gradients for every trainable tensor.
struct LossGrads {
    double loss = 0.0;
    ModelParams grads;
};

LossGrads loss_and_grads(const ModelParams& params, std::span<const TokenSequence> batch,
                         std::span<const ToneVector> targets);

double stable_sigmoid(double z);

// Binary checkpoint with shape headers; save/load round-trips bit-exactly.
void save_model(const std::filesystem::path& path, const ModelParams& params);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace tonepipe
