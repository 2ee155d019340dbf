#include "tonepipe/neuralnet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

#include "tonepipe/rng.hpp"

namespace tonepipe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr char kCheckpointMagic[8] = {'T', 'O', 'N', 'E', 'M', 'D', 'L', '1'};

double gelu(double x) {
    return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2));
}

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

// y = xhat .* gain + bias per row, xhat = (x - mean) * invstd.
void layer_norm_forward(const MatrixXd& x, const VectorXd& gain, const VectorXd& bias,
                        MatrixXd& y, MatrixXd& xhat, VectorXd& invstd) {
    const auto rows = x.rows();
    const auto cols = x.cols();
    y.resize(rows, cols);
    xhat.resize(rows, cols);
    invstd.resize(rows);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const double mu = x.row(r).mean();
        const double var = (x.row(r).array() - mu).square().mean();
        const double is = 1.0 / std::sqrt(var + kLayerNormEps);
        invstd(r) = is;
        xhat.row(r) = (x.row(r).array() - mu) * is;
        y.row(r) = xhat.row(r).cwiseProduct(gain.transpose()) + bias.transpose();
    }
}

void layer_norm_backward(const MatrixXd& dy, const MatrixXd& xhat, const VectorXd& invstd,
                         const VectorXd& gain, MatrixXd& dx, VectorXd& dgain, VectorXd& dbias) {
    const auto rows = dy.rows();
    const auto cols = dy.cols();
    dx.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        Eigen::RowVectorXd dxhat = dy.row(r).cwiseProduct(gain.transpose());
        const double m1 = dxhat.mean();
        const double m2 = dxhat.cwiseProduct(xhat.row(r)).mean();
        dx.row(r) = (dxhat.array() - m1 - xhat.row(r).array() * m2) * invstd(r);
        dgain += dy.row(r).cwiseProduct(xhat.row(r)).transpose();
        dbias += dy.row(r).transpose();
    }
}

void validate_sequence(const ModelConfig& cfg, const TokenSequence& seq) {
    if (static_cast<std::int64_t>(seq.ids.size()) != cfg.max_len ||
        seq.mask.size() != seq.ids.size()) {
        throw std::runtime_error("sequence length does not match model max_len");
    }
    for (auto id : seq.ids) {
        if (id < 0 || id >= cfg.vocab_size)
            throw std::runtime_error("token id " + std::to_string(id) +
                                     " outside vocabulary of size " + std::to_string(cfg.vocab_size));
    }
}

// Allocates every tensor at its configured shape, zero-filled, with the
// fixed positional table computed.
ModelParams make_params(const ModelConfig& config) {
    config.validate();
    ModelParams p;
    p.config = config;
    p.token_embedding = MatrixXd::Zero(config.vocab_size, config.d_model);
    p.positional = sinusoidal_positions(config.max_len, config.d_model);
    p.layers.resize(config.n_layers);
    for (auto& layer : p.layers) {
        layer.w_q = MatrixXd::Zero(config.d_model, config.d_model);
        layer.w_k = MatrixXd::Zero(config.d_model, config.d_model);
        layer.w_v = MatrixXd::Zero(config.d_model, config.d_model);
        layer.w_o = MatrixXd::Zero(config.d_model, config.d_model);
        layer.b_q = VectorXd::Zero(config.d_model);
        layer.b_k = VectorXd::Zero(config.d_model);
        layer.b_v = VectorXd::Zero(config.d_model);
        layer.b_o = VectorXd::Zero(config.d_model);
        layer.ln1_gain = VectorXd::Zero(config.d_model);
        layer.ln1_bias = VectorXd::Zero(config.d_model);
        layer.w_ffn1 = MatrixXd::Zero(config.d_model, config.d_ffn);
        layer.b_ffn1 = VectorXd::Zero(config.d_ffn);
        layer.w_ffn2 = MatrixXd::Zero(config.d_ffn, config.d_model);
        layer.b_ffn2 = VectorXd::Zero(config.d_model);
        layer.ln2_gain = VectorXd::Zero(config.d_model);
        layer.ln2_bias = VectorXd::Zero(config.d_model);
    }
    p.w_head = MatrixXd::Zero(config.d_model, config.n_labels);
    p.b_head = VectorXd::Zero(config.n_labels);
    return p;
}

template <class Tensor>
void fill_uniform(Tensor& t, double bound, std::mt19937_64& rng) {
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = uniform_range(rng, -bound, bound);
}

}  // namespace

void ModelConfig::validate() const {
    if (vocab_size < 3) throw std::runtime_error("vocab_size must cover the reserved tokens");
    if (d_model < 1 || n_heads < 1 || n_layers < 0 || d_ffn < 1 || max_len < 1)
        throw std::runtime_error("model dimensions must be positive");
    if (d_model % n_heads != 0)
        throw std::runtime_error("d_model (" + std::to_string(d_model) +
                                 ") must be divisible by n_heads (" + std::to_string(n_heads) + ")");
    if (n_labels != kNumTones) throw std::runtime_error("n_labels is fixed at 7");
    if (max_len > static_cast<std::int64_t>(kMaxSequenceLength))
        throw std::runtime_error("max_len is capped at " + std::to_string(kMaxSequenceLength));
}

MatrixXd sinusoidal_positions(Eigen::Index max_len, Eigen::Index d_model) {
    MatrixXd pe(max_len, d_model);
    for (Eigen::Index pos = 0; pos < max_len; ++pos) {
        for (Eigen::Index i = 0; i < d_model; ++i) {
            const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
            const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
            pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

ModelParams init_model(const ModelConfig& config) {
    ModelParams p = make_params(config);
    std::mt19937_64 rng(config.seed);

    const double emb_bound = 1.0 / std::sqrt(static_cast<double>(config.d_model));
    const double ffn2_bound = 1.0 / std::sqrt(static_cast<double>(config.d_ffn));

    fill_uniform(p.token_embedding, emb_bound, rng);
    for (auto& layer : p.layers) {
        fill_uniform(layer.w_q, emb_bound, rng);
        fill_uniform(layer.w_k, emb_bound, rng);
        fill_uniform(layer.w_v, emb_bound, rng);
        fill_uniform(layer.w_o, emb_bound, rng);
        layer.ln1_gain.setOnes();
        layer.ln2_gain.setOnes();
        fill_uniform(layer.w_ffn1, emb_bound, rng);
        fill_uniform(layer.w_ffn2, ffn2_bound, rng);
    }
    fill_uniform(p.w_head, emb_bound, rng);
    return p;
}

ModelParams zeros_like(const ModelParams& like) {
    ModelParams p = make_params(like.config);
    p.positional = like.positional;
    return p;
}

double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

MatrixXd forward(const ModelParams& params, std::span<const TokenSequence> batch,
                 ForwardCache* cache) {
    const auto& cfg = params.config;
    const Eigen::Index len = cfg.max_len;
    const Eigen::Index d = cfg.d_model;
    const Eigen::Index heads = cfg.n_heads;
    const Eigen::Index dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    MatrixXd logits(batch.size(), cfg.n_labels);
    if (cache) {
        cache->sequences.clear();
        cache->sequences.resize(batch.size());
    }

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& seq = batch[b];
        validate_sequence(cfg, seq);

        MatrixXd x(len, d);
        for (Eigen::Index i = 0; i < len; ++i)
            x.row(i) = params.token_embedding.row(seq.ids[i]) + params.positional.row(i);

        SequenceCache* sc = cache ? &cache->sequences[b] : nullptr;
        if (sc) sc->layers.resize(params.layers.size());

        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            const auto& layer = params.layers[l];
            LayerCache local;
            LayerCache& c = sc ? sc->layers[l] : local;
            c.input = x;

            c.q = (x * layer.w_q).rowwise() + layer.b_q.transpose();
            c.k = (x * layer.w_k).rowwise() + layer.b_k.transpose();
            c.v = (x * layer.w_v).rowwise() + layer.b_v.transpose();

            c.attn.resize(heads);
            c.concat.resize(len, d);
            for (Eigen::Index h = 0; h < heads; ++h) {
                auto qh = c.q.middleCols(h * dh, dh);
                auto kh = c.k.middleCols(h * dh, dh);
                auto vh = c.v.middleCols(h * dh, dh);
                MatrixXd scores = (qh * kh.transpose()) * scale;
                for (Eigen::Index j = 0; j < len; ++j) {
                    if (!seq.mask[j]) scores.col(j).setConstant(-kInf);
                }
                MatrixXd& p = c.attn[h];
                p.resize(len, len);
                for (Eigen::Index r = 0; r < len; ++r) {
                    const double m = scores.row(r).maxCoeff();
                    p.row(r) = (scores.row(r).array() - m).exp();
                    p.row(r) /= p.row(r).sum();
                }
                c.concat.middleCols(h * dh, dh) = p * vh;
            }

            MatrixXd attn_out = (c.concat * layer.w_o).rowwise() + layer.b_o.transpose();
            MatrixXd res1 = c.input + attn_out;
            layer_norm_forward(res1, layer.ln1_gain, layer.ln1_bias, c.ffn_input, c.ln1_xhat,
                               c.ln1_invstd);

            c.ffn_pre = (c.ffn_input * layer.w_ffn1).rowwise() + layer.b_ffn1.transpose();
            c.ffn_act = c.ffn_pre.unaryExpr([](double v) { return gelu(v); });
            MatrixXd ffn_out = (c.ffn_act * layer.w_ffn2).rowwise() + layer.b_ffn2.transpose();
            MatrixXd res2 = c.ffn_input + ffn_out;
            layer_norm_forward(res2, layer.ln2_gain, layer.ln2_bias, x, c.ln2_xhat, c.ln2_invstd);
        }

        if (sc) sc->output = x;
        logits.row(b) = x.row(0) * params.w_head + params.b_head.transpose();
    }

    if (cache) cache->logits = logits;
    return logits.unaryExpr([](double z) { return stable_sigmoid(z); });
}

LossGrads loss_and_grads(const ModelParams& params, std::span<const TokenSequence> batch,
                         std::span<const ToneVector> targets) {
    if (batch.empty() || batch.size() != targets.size())
        throw std::runtime_error("loss_and_grads needs a non-empty batch matching its targets");

    const auto& cfg = params.config;
    const Eigen::Index len = cfg.max_len;
    const Eigen::Index d = cfg.d_model;
    const Eigen::Index heads = cfg.n_heads;
    const Eigen::Index dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const double norm = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(cfg.n_labels));

    ForwardCache cache;
    forward(params, batch, &cache);

    LossGrads result;
    result.grads = zeros_like(params);
    ModelParams& g = result.grads;

    double loss = 0.0;
    MatrixXd dlogits(batch.size(), cfg.n_labels);
    for (std::size_t b = 0; b < batch.size(); ++b) {
        for (Eigen::Index j = 0; j < cfg.n_labels; ++j) {
            const double z = cache.logits(b, j);
            const double y = targets[b].bits[j] ? 1.0 : 0.0;
            loss += softplus(z) - z * y;
            dlogits(b, j) = (stable_sigmoid(z) - y) * norm;
        }
    }
    result.loss = loss * norm;

    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& seq = batch[b];
        const SequenceCache& sc = cache.sequences[b];

        g.w_head += sc.output.row(0).transpose() * dlogits.row(b);
        g.b_head += dlogits.row(b).transpose();

        MatrixXd dx = MatrixXd::Zero(len, d);
        dx.row(0) = dlogits.row(b) * params.w_head.transpose();

        for (std::size_t li = params.layers.size(); li-- > 0;) {
            const auto& layer = params.layers[li];
            const LayerCache& c = sc.layers[li];
            auto& gl = g.layers[li];

            MatrixXd dres2;
            layer_norm_backward(dx, c.ln2_xhat, c.ln2_invstd, layer.ln2_gain, dres2, gl.ln2_gain,
                                gl.ln2_bias);

            // Residual: res2 = ffn_input + ffn_out.
            MatrixXd dffn_input = dres2;
            const MatrixXd& dffn_out = dres2;

            MatrixXd dact = dffn_out * layer.w_ffn2.transpose();
            gl.w_ffn2 += c.ffn_act.transpose() * dffn_out;
            gl.b_ffn2 += dffn_out.colwise().sum().transpose();

            MatrixXd dpre =
                dact.cwiseProduct(c.ffn_pre.unaryExpr([](double v) { return gelu_grad(v); }));
            gl.w_ffn1 += c.ffn_input.transpose() * dpre;
            gl.b_ffn1 += dpre.colwise().sum().transpose();
            dffn_input += dpre * layer.w_ffn1.transpose();

            MatrixXd dres1;
            layer_norm_backward(dffn_input, c.ln1_xhat, c.ln1_invstd, layer.ln1_gain, dres1,
                                gl.ln1_gain, gl.ln1_bias);

            // Residual: res1 = input + attn_out.
            MatrixXd dinput = dres1;
            const MatrixXd& dattn_out = dres1;

            MatrixXd dconcat = dattn_out * layer.w_o.transpose();
            gl.w_o += c.concat.transpose() * dattn_out;
            gl.b_o += dattn_out.colwise().sum().transpose();

            MatrixXd dq = MatrixXd::Zero(len, d);
            MatrixXd dk = MatrixXd::Zero(len, d);
            MatrixXd dv = MatrixXd::Zero(len, d);
            for (Eigen::Index h = 0; h < heads; ++h) {
                const MatrixXd& p = c.attn[h];
                auto qh = c.q.middleCols(h * dh, dh);
                auto kh = c.k.middleCols(h * dh, dh);
                auto vh = c.v.middleCols(h * dh, dh);
                auto doh = dconcat.middleCols(h * dh, dh);

                MatrixXd dp = doh * vh.transpose();
                dv.middleCols(h * dh, dh) = p.transpose() * doh;

                MatrixXd ds(len, len);
                for (Eigen::Index r = 0; r < len; ++r) {
                    const double dot = dp.row(r).cwiseProduct(p.row(r)).sum();
                    ds.row(r) = p.row(r).array() * (dp.row(r).array() - dot);
                }
                dq.middleCols(h * dh, dh) = (ds * kh) * scale;
                dk.middleCols(h * dh, dh) = (ds.transpose() * qh) * scale;
            }

            gl.w_q += c.input.transpose() * dq;
            gl.b_q += dq.colwise().sum().transpose();
            gl.w_k += c.input.transpose() * dk;
            gl.b_k += dk.colwise().sum().transpose();
            gl.w_v += c.input.transpose() * dv;
            gl.b_v += dv.colwise().sum().transpose();

            dinput += dq * layer.w_q.transpose();
            dinput += dk * layer.w_k.transpose();
            dinput += dv * layer.w_v.transpose();
            dx = std::move(dinput);
        }

        for (Eigen::Index i = 0; i < len; ++i) g.token_embedding.row(seq.ids[i]) += dx.row(i);
    }

    return result;
}

void save_model(const std::filesystem::path& path, const ModelParams& params) {
    auto dir = path.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + tmp.string());

        out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
        auto write_i64 = [&](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
        const auto& c = params.config;
        write_i64(c.vocab_size);
        write_i64(c.d_model);
        write_i64(c.n_heads);
        write_i64(c.n_layers);
        write_i64(c.d_ffn);
        write_i64(c.max_len);
        write_i64(c.n_labels);
        write_i64(static_cast<std::int64_t>(c.seed));

        auto write_tensor = [&](const std::string& name, const auto& t) {
            const std::uint32_t n = static_cast<std::uint32_t>(name.size());
            out.write(reinterpret_cast<const char*>(&n), 4);
            out.write(name.data(), n);
            write_i64(t.rows());
            write_i64(t.cols());
            out.write(reinterpret_cast<const char*>(t.data()),
                      static_cast<std::streamsize>(sizeof(double) * t.size()));
        };
        for_each_tensor(params, write_tensor);
        write_tensor("positional", params.positional);
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw std::runtime_error("checkpoint write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a model checkpoint: " + path.string());

    auto read_i64 = [&]() {
        std::int64_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    ModelConfig cfg;
    cfg.vocab_size = read_i64();
    cfg.d_model = read_i64();
    cfg.n_heads = read_i64();
    cfg.n_layers = read_i64();
    cfg.d_ffn = read_i64();
    cfg.max_len = read_i64();
    cfg.n_labels = read_i64();
    cfg.seed = static_cast<std::uint64_t>(read_i64());
    if (!in) throw std::runtime_error("truncated checkpoint header: " + path.string());

    ModelParams params = make_params(cfg);
    auto read_tensor = [&](const std::string& name, auto& t) {
        std::uint32_t n = 0;
        in.read(reinterpret_cast<char*>(&n), 4);
        std::string stored(n, '\0');
        in.read(stored.data(), n);
        const std::int64_t rows = read_i64();
        const std::int64_t cols = read_i64();
        if (!in || stored != name || rows != t.rows() || cols != t.cols())
            throw std::runtime_error("checkpoint tensor mismatch at '" + name + "' in " +
                                     path.string());
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(sizeof(double) * t.size()));
    };
    for_each_tensor(params, read_tensor);
    read_tensor("positional", params.positional);
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    return params;
}

}  // namespace tonepipe
