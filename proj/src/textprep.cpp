#include "tonepipe/textprep.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <stdexcept>

#include "tonepipe/text.hpp"

namespace tonepipe {

namespace {

bool is_word_char(char32_t cp) {
    return !is_whitespace(cp) && !is_punctuation(cp);
}

const std::vector<std::string> kReservedTokens = {"<pad>", "<unk>", "<cls>"};

}  // namespace

std::vector<std::string> word_tokens(std::string_view text) {
    std::u32string cps = compose_nfc(decode_utf8(text));
    for (auto& cp : cps) cp = to_lower(cp);

    std::vector<std::string> tokens;
    std::u32string current;
    auto flush = [&] {
        if (!current.empty()) {
            tokens.push_back(encode_utf8(current));
            current.clear();
        }
    };
    for (std::size_t i = 0; i < cps.size(); ++i) {
        char32_t cp = cps[i];
        if (is_whitespace(cp)) {
            flush();
        } else if (cp == U'#' || cp == U'@') {
            // Prefix glued to the following word; a bare '#'/'@' is dropped.
            flush();
            if (i + 1 < cps.size() && is_word_char(cps[i + 1])) current.push_back(cp);
        } else if (is_punctuation(cp)) {
            flush();
        } else {
            current.push_back(cp);
        }
    }
    flush();
    return tokens;
}

Vocabulary build_vocab(std::span<const TweetRecord> corpus, std::size_t max_size,
                       std::size_t min_freq) {
    if (corpus.empty()) throw std::runtime_error("cannot build vocabulary from an empty corpus");
    if (max_size < kReservedTokens.size() + 1)
        throw std::runtime_error("vocabulary max_size must be >= 4");
    if (min_freq < 1) throw std::runtime_error("min_freq must be >= 1");

    std::map<std::string, std::size_t> freq;  // ordered map gives the lexicographic tie-break
    for (const auto& tweet : corpus) {
        for (auto& tok : word_tokens(tweet.text)) ++freq[tok];
    }

    std::vector<const std::pair<const std::string, std::size_t>*> ranked;
    ranked.reserve(freq.size());
    for (const auto& entry : freq) {
        if (entry.second >= min_freq) ranked.push_back(&entry);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto* a, const auto* b) { return a->second > b->second; });

    Vocabulary vocab;
    vocab.id_to_token = kReservedTokens;
    const std::size_t admit = std::min(ranked.size(), max_size - kReservedTokens.size());
    for (std::size_t i = 0; i < admit; ++i) vocab.id_to_token.push_back(ranked[i]->first);
    for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i)
        vocab.token_to_id[vocab.id_to_token[i]] = static_cast<std::int32_t>(i);
    return vocab;
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len < 1 || max_len > kMaxSequenceLength)
        throw std::runtime_error("max_len must be in [1, " + std::to_string(kMaxSequenceLength) + "]");

    TokenSequence seq;
    seq.ids.assign(max_len, Vocabulary::kPadId);
    seq.mask.assign(max_len, 0);
    seq.ids[0] = Vocabulary::kClsId;
    seq.mask[0] = 1;

    std::size_t pos = 1;
    for (const auto& tok : word_tokens(text)) {
        if (pos >= max_len) break;
        seq.ids[pos] = vocab.id_of(tok);
        seq.mask[pos] = 1;
        ++pos;
    }
    return seq;
}

void save_vocabulary(std::ostream& out, const Vocabulary& vocab) {
    for (std::size_t i = 0; i < vocab.id_to_token.size(); ++i) {
        out << vocab.id_to_token[i] << '\t' << i << '\n';
    }
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open vocabulary: " + path.string());

    Vocabulary vocab;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw std::runtime_error("malformed vocabulary line " + std::to_string(line_no));
        std::string token = line.substr(0, tab);
        std::int32_t id = 0;
        auto id_part = std::string_view(line).substr(tab + 1);
        auto [ptr, ec] = std::from_chars(id_part.data(), id_part.data() + id_part.size(), id);
        if (ec != std::errc{} || ptr != id_part.data() + id_part.size() ||
            id != static_cast<std::int32_t>(vocab.id_to_token.size())) {
            throw std::runtime_error("non-contiguous id at vocabulary line " + std::to_string(line_no));
        }
        vocab.id_to_token.push_back(token);
        auto [it, inserted] = vocab.token_to_id.emplace(std::move(token), id);
        if (!inserted)
            throw std::runtime_error("duplicate token at vocabulary line " + std::to_string(line_no));
    }
    for (std::size_t i = 0; i < kReservedTokens.size(); ++i) {
        if (vocab.id_to_token.size() <= i || vocab.id_to_token[i] != kReservedTokens[i])
            throw std::runtime_error("vocabulary is missing reserved tokens: " + path.string());
    }
    return vocab;
}

}  // namespace tonepipe
