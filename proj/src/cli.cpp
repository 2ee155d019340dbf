#include "tonepipe/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <iostream>
#include <map>
#include <set>
#include <string_view>
#include <unordered_map>

#include "tonepipe/analytics.hpp"
#include "tonepipe/config.hpp"
#include "tonepipe/corpus.hpp"
#include "tonepipe/csv.hpp"
#include "tonepipe/geoloc.hpp"
#include "tonepipe/inference.hpp"
#include "tonepipe/io.hpp"
#include "tonepipe/metrics.hpp"
#include "tonepipe/neuralnet.hpp"
#include "tonepipe/textprep.hpp"
#include "tonepipe/training.hpp"

namespace tonepipe {

namespace {

namespace fs = std::filesystem;

constexpr std::pair<std::string_view, std::string_view> kKeyHelp[] = {
    {"data.corpus", "raw tweets file (CSV or JSONL)"},
    {"data.format", "corpus format: csv or jsonl"},
    {"data.labels", "tone labels JSONL file"},
    {"data.prepared", "prepared labeled dataset CSV"},
    {"data.predictions", "tone predictions CSV"},
    {"data.tagged", "geotagged tweets CSV"},
    {"data.gazetteer", "alias<TAB>country gazetteer TSV"},
    {"data.model", "model checkpoint path"},
    {"data.vocab", "vocabulary TSV path"},
    {"data.out_dir", "output directory, created if absent"},
    {"sample.min_retweets", "keep tweets with at least this many retweets"},
    {"sample.per_day", "per-day subsample cap"},
    {"sample.seed", "per-day sampling seed"},
    {"vocab.max_size", "vocabulary size cap, reserved ids included"},
    {"vocab.min_freq", "minimum token frequency for a vocabulary slot"},
    {"model.d_model", "embedding width"},
    {"model.n_heads", "attention heads"},
    {"model.n_layers", "encoder layers"},
    {"model.d_ffn", "feed-forward width"},
    {"model.max_len", "sequence length"},
    {"model.seed", "parameter init seed"},
    {"train.learning_rate", "Adam learning rate"},
    {"train.sub_batch", "examples per forward pass"},
    {"train.grad_accum_steps", "sub-batches accumulated per optimizer step"},
    {"train.epochs", "training epochs"},
    {"train.split_ratio", "train fraction of the labeled set"},
    {"train.seed", "split and shuffle seed"},
    {"train.eval_every", "evaluate every N optimizer steps"},
    {"infer.threshold", "tone assignment probability threshold"},
    {"infer.batch_size", "prediction batch size"},
    {"analyze.min_total", "minimum tweets for a country to be ranked"},
    {"analyze.top_n", "ranking length"},
    {"report.countries", "semicolon-separated country filter; empty = global series"},
};

std::string_view key_help(std::string_view key) {
    for (const auto& [k, help] : kKeyHelp)
        if (k == key) return help;
    throw std::logic_error("unregistered settings key: " + std::string(key));
}

bool known_key(const std::string& key) {
    for (const auto& [k, help] : kKeyHelp)
        if (k == key) return true;
    return false;
}

// Final value of a setting: command-line flag, else config file, else the
// built-in default at the call site.
class Settings {
  public:
    Settings(ConfigMap cfg, std::map<std::string, std::string> flags)
        : cfg_(std::move(cfg)), flags_(std::move(flags)) {}

    std::string str(std::string_view key, std::string_view fallback = {}) const {
        if (auto it = flags_.find(std::string(key)); it != flags_.end()) return it->second;
        if (auto v = cfg_.get(key)) return *v;
        return std::string(fallback);
    }

    std::int64_t integer(std::string_view key, std::int64_t fallback) const {
        const std::string s = str(key);
        if (s.empty()) return fallback;
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw std::runtime_error("invalid integer for " + std::string(key) + ": '" + s + "'");
        return v;
    }

    std::uint64_t seed(std::string_view key, std::uint64_t fallback) const {
        const std::string s = str(key);
        if (s.empty()) return fallback;
        std::uint64_t v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || p != s.data() + s.size())
            throw std::runtime_error("invalid seed for " + std::string(key) + ": '" + s + "'");
        return v;
    }

    double real(std::string_view key, double fallback) const {
        const std::string s = str(key);
        if (s.empty()) return fallback;
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size())
            throw std::runtime_error("invalid number for " + std::string(key) + ": '" + s + "'");
        return v;
    }

    fs::path out_dir() const {
        fs::path dir{str("data.out_dir", "out")};
        fs::create_directories(dir);
        return dir;
    }

    // Required input path; `fallback` covers the pipeline's default artifact
    // locations. Missing files fail here, before any stage starts work.
    fs::path input_path(std::string_view key, const fs::path& fallback = {}) const {
        const std::string s = str(key);
        const fs::path p = s.empty() ? fallback : fs::path(s);
        if (p.empty())
            throw std::runtime_error("missing required setting '" + std::string(key) + "'");
        if (!fs::exists(p))
            throw std::runtime_error("input path does not exist: " + p.string() + " (" +
                                     std::string(key) + ")");
        return p;
    }

    fs::path output_path(std::string_view key, const fs::path& fallback) const {
        const std::string s = str(key);
        return s.empty() ? fallback : fs::path(s);
    }

  private:
    ConfigMap cfg_;
    std::map<std::string, std::string> flags_;
};

CorpusFormat corpus_format(const Settings& s) {
    const std::string f = s.str("data.format", "csv");
    if (f == "csv") return CorpusFormat::kCsv;
    if (f == "jsonl") return CorpusFormat::kJsonl;
    throw std::runtime_error("invalid data.format '" + f + "' (expected csv or jsonl)");
}

void check_vocab_compat(const Vocabulary& vocab, const ModelParams& model) {
    if (static_cast<std::int64_t>(vocab.size()) != model.config.vocab_size)
        throw std::runtime_error("vocabulary size " + std::to_string(vocab.size()) +
                                 " does not match checkpoint vocab_size " +
                                 std::to_string(model.config.vocab_size));
}

void cmd_prepare(const Settings& s) {
    const fs::path out = s.out_dir();
    const fs::path corpus_path = s.input_path("data.corpus");
    const fs::path labels_path = s.input_path("data.labels");

    const LoadResult load = load_tweets(corpus_path, corpus_format(s));
    const auto filtered = filter_quality(load.records, s.integer("sample.min_retweets", 2));
    const auto sampled =
        sample_per_day(filtered, static_cast<std::size_t>(s.integer("sample.per_day", 2000)),
                       s.seed("sample.seed", 42));
    const JoinResult join = join_labels(sampled, labels_path);

    atomic_write_file(out / "rejects.jsonl",
                      [&](std::ostream& o) { write_rejects_report(o, load.rejects); });
    atomic_write_file(out / "prepared.csv",
                      [&](std::ostream& o) { write_labeled_csv(o, join.examples); });

    std::cout << "loaded=" << load.records.size() << " rejected=" << load.rejects.size()
              << " filtered=" << filtered.size() << " sampled=" << sampled.size()
              << " labeled=" << join.examples.size() << " unlabeled=" << join.unlabeled_tweets
              << " unmatched=" << join.unmatched_labels << "\n";
}

void cmd_train(const Settings& s) {
    const fs::path out = s.out_dir();
    const fs::path prepared = s.input_path("data.prepared", out / "prepared.csv");
    const auto examples = read_labeled_csv(prepared);

    TrainConfig tcfg;
    tcfg.learning_rate = s.real("train.learning_rate", tcfg.learning_rate);
    tcfg.sub_batch = s.integer("train.sub_batch", tcfg.sub_batch);
    tcfg.grad_accum_steps = s.integer("train.grad_accum_steps", tcfg.grad_accum_steps);
    tcfg.epochs = s.integer("train.epochs", tcfg.epochs);
    tcfg.split_ratio = s.real("train.split_ratio", tcfg.split_ratio);
    tcfg.seed = s.seed("train.seed", 42);
    tcfg.eval_every = s.integer("train.eval_every", tcfg.eval_every);
    tcfg.validate();

    const auto [train_set, test_set] = split(examples, tcfg.split_ratio, tcfg.seed);

    std::vector<TweetRecord> train_tweets;
    train_tweets.reserve(train_set.size());
    for (const auto& ex : train_set) train_tweets.push_back(ex.tweet);
    const Vocabulary vocab =
        build_vocab(train_tweets, static_cast<std::size_t>(s.integer("vocab.max_size", 10000)),
                    static_cast<std::size_t>(s.integer("vocab.min_freq", 1)));

    ModelConfig mcfg;
    mcfg.vocab_size = static_cast<std::int64_t>(vocab.size());
    mcfg.d_model = s.integer("model.d_model", mcfg.d_model);
    mcfg.n_heads = s.integer("model.n_heads", mcfg.n_heads);
    mcfg.n_layers = s.integer("model.n_layers", mcfg.n_layers);
    mcfg.d_ffn = s.integer("model.d_ffn", mcfg.d_ffn);
    mcfg.max_len = s.integer("model.max_len", mcfg.max_len);
    mcfg.seed = s.seed("model.seed", 42);
    mcfg.validate();

    auto [trained, history] = train(init_model(mcfg), train_set, test_set, tcfg, vocab);

    save_model(s.output_path("data.model", out / "model.bin"), trained);
    atomic_write_file(s.output_path("data.vocab", out / "vocab.tsv"),
                      [&](std::ostream& o) { save_vocabulary(o, vocab); });
    atomic_write_file(out / "history.csv",
                      [&](std::ostream& o) { write_history_csv(o, history); });

    const auto inputs = encode_examples(test_set, vocab, mcfg.max_len);
    const auto targets = example_targets(test_set);
    const auto [eval_loss, lrap_value] = evaluate(trained, inputs, targets, tcfg.sub_batch);
    std::cout << "train_examples=" << train_set.size() << " test_examples=" << test_set.size()
              << " vocab=" << vocab.size() << " steps=" << history.steps.size()
              << " eval_loss=" << fmt_double(eval_loss) << " lrap=" << fmt_double(lrap_value)
              << "\n";
}

void cmd_eval(const Settings& s) {
    const fs::path out = s.out_dir();
    const auto examples = read_labeled_csv(s.input_path("data.prepared", out / "prepared.csv"));
    const ModelParams model = load_model(s.input_path("data.model", out / "model.bin"));
    const Vocabulary vocab = load_vocabulary(s.input_path("data.vocab", out / "vocab.tsv"));
    check_vocab_compat(vocab, model);

    const auto inputs = encode_examples(examples, vocab, model.config.max_len);
    const auto targets = example_targets(examples);
    const auto [eval_loss, lrap_value] =
        evaluate(model, inputs, targets, s.integer("infer.batch_size", 32));

    atomic_write_file(out / "eval.json", [&](std::ostream& o) {
        nlohmann::json j;
        j["examples"] = examples.size();
        j["eval_loss"] = eval_loss;
        j["lrap"] = lrap_value;
        o << j.dump(2) << '\n';
    });
    std::cout << "eval_loss " << fmt_double(eval_loss) << "\n"
              << "lrap " << fmt_double(lrap_value) << "\n";
}

void cmd_predict(const Settings& s) {
    const fs::path out = s.out_dir();
    const fs::path corpus_path = s.input_path("data.corpus");
    const ModelParams model = load_model(s.input_path("data.model", out / "model.bin"));
    const Vocabulary vocab = load_vocabulary(s.input_path("data.vocab", out / "vocab.tsv"));
    check_vocab_compat(vocab, model);
    const double threshold = s.real("infer.threshold", 0.5);
    const std::int64_t batch_size = s.integer("infer.batch_size", 32);

    const LoadResult load = load_tweets(corpus_path, corpus_format(s));
    const auto filtered = filter_quality(load.records, s.integer("sample.min_retweets", 2));

    std::size_t written = 0;
    atomic_write_file(out / "predictions.csv", [&](std::ostream& o) {
        write_csv_row(o, prediction_csv_header());
        predict_stream(model, vocab, filtered, batch_size, threshold,
                       [&](const TonePrediction& p) {
                           write_prediction_row(o, p);
                           ++written;
                       });
    });
    std::cout << "loaded=" << load.records.size() << " rejected=" << load.rejects.size()
              << " filtered=" << filtered.size() << " predicted=" << written << "\n";
}

void cmd_geotag(const Settings& s) {
    const fs::path out = s.out_dir();
    const fs::path corpus_path = s.input_path("data.corpus");
    const fs::path predictions_path = s.input_path("data.predictions", out / "predictions.csv");
    const Gazetteer gz = load_gazetteer(s.input_path("data.gazetteer"));

    const LoadResult load = load_tweets(corpus_path, corpus_format(s));
    const auto filtered = filter_quality(load.records, s.integer("sample.min_retweets", 2));

    std::unordered_map<std::string, ToneVector> tones_by_id;
    for (const auto& p : read_predictions_csv(predictions_path))
        tones_by_id.emplace(p.tweet_id, p.tones);

    std::vector<ToneVector> tones;
    tones.reserve(filtered.size());
    for (const auto& t : filtered) {
        auto it = tones_by_id.find(t.tweet_id);
        if (it == tones_by_id.end())
            throw std::runtime_error("no prediction for tweet_id '" + t.tweet_id + "'");
        tones.push_back(it->second);
    }

    const GeotagResult result = geotag(filtered, tones, gz);
    atomic_write_file(out / "tagged.csv",
                      [&](std::ostream& o) { write_tagged_csv(o, result.tagged); });
    atomic_write_file(out / "drop_report.json",
                      [&](std::ostream& o) { write_drop_report(o, filtered.size(), result); });
    std::cout << "tagged=" << result.tagged.size()
              << " dropped_missing=" << result.dropped_missing
              << " dropped_unresolved=" << result.dropped_unresolved << "\n";
}

void cmd_analyze(const Settings& s) {
    const fs::path out = s.out_dir();
    const auto tagged = read_tagged_csv(s.input_path("data.tagged", out / "tagged.csv"));
    const CountryCounts counts = aggregate(tagged);

    std::vector<IndicatorRow> rows;
    rows.reserve(counts.size());
    for (const auto& [name, c] : counts) rows.push_back(indicators(c));

    const std::int64_t min_total = s.integer("analyze.min_total", 100);
    const std::int64_t top_n = s.integer("analyze.top_n", 10);
    const auto joy_rank = rank_countries(rows, IndicatorKey::kJoySadnessRatio, min_total, top_n);
    const auto sad_rank = rank_countries(rows, IndicatorKey::kSadnessJoyRatio, min_total, top_n);

    atomic_write_file(out / "counts.csv", [&](std::ostream& o) { write_counts_csv(o, counts); });
    atomic_write_file(out / "indicators.csv",
                      [&](std::ostream& o) { write_indicators_csv(o, rows); });
    atomic_write_file(out / "ranking_joy_sadness.csv", [&](std::ostream& o) {
        write_ranking_csv(o, joy_rank, IndicatorKey::kJoySadnessRatio);
    });
    atomic_write_file(out / "ranking_sadness_joy.csv", [&](std::ostream& o) {
        write_ranking_csv(o, sad_rank, IndicatorKey::kSadnessJoyRatio);
    });
    std::cout << "countries=" << counts.size() << " tagged_tweets=" << tagged.size() << "\n";
}

void cmd_report(const Settings& s) {
    const fs::path out = s.out_dir();
    const auto tagged = read_tagged_csv(s.input_path("data.tagged", out / "tagged.csv"));

    std::optional<std::vector<std::string>> filter;
    const std::string list = s.str("report.countries");
    if (!list.empty()) {
        filter.emplace();
        std::size_t start = 0;
        for (std::size_t i = 0; i <= list.size(); ++i) {
            if (i == list.size() || list[i] == ';') {
                std::string name = list.substr(start, i - start);
                while (!name.empty() && name.front() == ' ') name.erase(name.begin());
                while (!name.empty() && name.back() == ' ') name.pop_back();
                if (!name.empty()) filter->push_back(std::move(name));
                start = i + 1;
            }
        }
        if (filter->empty())
            throw std::runtime_error("report.countries lists no country names");
    }

    const auto series = temporal_series(tagged, filter);
    atomic_write_file(out / "series.csv", [&](std::ostream& o) { write_series_csv(o, series); });
    std::cout << "series_rows=" << series.size() << "\n";
}

}  // namespace

int run_command(int argc, const char* const* argv) {
    CLI::App app{"tweet tone analysis pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::map<std::string, std::string> flags;

    struct Cmd {
        CLI::App* sub;
        void (*fn)(const Settings&);
    };
    std::vector<Cmd> cmds;

    auto add_cmd = [&](const char* name, const char* desc, void (*fn)(const Settings&),
                       std::initializer_list<std::string_view> keys) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "key=value settings file");
        for (std::string_view key : keys) {
            sub->add_option_function<std::string>(
                "--" + std::string(key),
                [&flags, k = std::string(key)](const std::string& v) { flags[k] = v; },
                std::string(key_help(key)));
        }
        cmds.push_back({sub, fn});
    };

    add_cmd("prepare", "load, quality-filter, subsample and label the corpus", cmd_prepare,
            {"data.corpus", "data.format", "data.labels", "data.out_dir", "sample.min_retweets",
             "sample.per_day", "sample.seed"});
    add_cmd("train", "split the prepared set and train a tone model", cmd_train,
            {"data.prepared", "data.model", "data.vocab", "data.out_dir", "vocab.max_size",
             "vocab.min_freq", "model.d_model", "model.n_heads", "model.n_layers", "model.d_ffn",
             "model.max_len", "model.seed", "train.learning_rate", "train.sub_batch",
             "train.grad_accum_steps", "train.epochs", "train.split_ratio", "train.seed",
             "train.eval_every"});
    add_cmd("eval", "score a checkpoint on a labeled dataset", cmd_eval,
            {"data.prepared", "data.model", "data.vocab", "data.out_dir", "infer.batch_size"});
    add_cmd("predict", "batch tone prediction over a corpus", cmd_predict,
            {"data.corpus", "data.format", "data.model", "data.vocab", "data.out_dir",
             "sample.min_retweets", "infer.threshold", "infer.batch_size"});
    add_cmd("geotag", "attach countries to predicted tweets", cmd_geotag,
            {"data.corpus", "data.format", "data.predictions", "data.gazetteer", "data.out_dir",
             "sample.min_retweets"});
    add_cmd("analyze", "aggregate tone counts, indicators and rankings", cmd_analyze,
            {"data.tagged", "data.out_dir", "analyze.min_total", "analyze.top_n"});
    add_cmd("report", "per-day tone series for plotting", cmd_report,
            {"data.tagged", "data.out_dir", "report.countries"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        for (const Cmd& c : cmds) {
            if (!app.got_subcommand(c.sub)) continue;
            ConfigMap cfg;
            if (!config_path.empty()) cfg = load_config(config_path);
            for (const auto& [key, value] : cfg.values)
                if (!known_key(key))
                    throw std::runtime_error("unknown config key '" + key + "'");
            c.fn(Settings(std::move(cfg), std::move(flags)));
            return 0;
        }
        throw std::runtime_error("no command given");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int run_command(const std::vector<std::string>& args) {
    std::vector<std::string> full = {"tonepipe"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& a : full) argv.push_back(a.c_str());
    return run_command(static_cast<int>(argv.size()), argv.data());
}

}  // namespace tonepipe
