#include "tonepipe/tones.hpp"

#include <stdexcept>

namespace tonepipe {

std::optional<ToneLabel> parse_tone(std::string_view name) {
    for (int i = 0; i < kNumTones; ++i) {
        if (kToneNames[i] == name) return static_cast<ToneLabel>(i);
    }
    return std::nullopt;
}

std::string tone_list_string(const ToneVector& tones) {
    std::string out;
    for (int i = 0; i < kNumTones; ++i) {
        if (!tones.bits[i]) continue;
        if (!out.empty()) out += ';';
        out += kToneNames[i];
    }
    return out;
}

ToneVector parse_tone_list(std::string_view list) {
    ToneVector tones;
    std::size_t pos = 0;
    while (pos < list.size()) {
        std::size_t sep = list.find(';', pos);
        if (sep == std::string_view::npos) sep = list.size();
        std::string_view name = list.substr(pos, sep - pos);
        if (!name.empty()) {
            auto t = parse_tone(name);
            if (!t) throw std::runtime_error("unknown tone: " + std::string(name));
            tones.set(*t);
        }
        pos = sep + 1;
    }
    return tones;
}

}  // namespace tonepipe
