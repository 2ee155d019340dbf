#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tonepipe {

// The seven tone classes, in the fixed index order shared by every module
// and file format in this project.
enum class ToneLabel : int {
    kConfident = 0,
    kAnger = 1,
    kFear = 2,
    kJoy = 3,
    kSadness = 4,
    kAnalytical = 5,
    kTentative = 6,
};

inline constexpr int kNumTones = 7;

inline constexpr std::array<std::string_view, kNumTones> kToneNames = {
    "confident", "anger", "fear", "joy", "sadness", "analytical", "tentative",
};

std::optional<ToneLabel> parse_tone(std::string_view name);

inline std::string_view tone_name(ToneLabel t) {
    return kToneNames[static_cast<int>(t)];
}

// Binary multi-label tone assignment. All-zero is legal: a tweet may carry
// no high-confidence tone at all.
struct ToneVector {
    std::array<std::uint8_t, kNumTones> bits{};

    bool test(ToneLabel t) const { return bits[static_cast<int>(t)] != 0; }
    void set(ToneLabel t, bool value = true) {
        bits[static_cast<int>(t)] = value ? 1 : 0;
    }
    int count() const {
        int n = 0;
        for (auto b : bits) n += b;
        return n;
    }
    bool operator==(const ToneVector&) const = default;
};

// Independent per-tone probabilities in [0,1]; no sum-to-one constraint.
using ProbVector = std::array<double, kNumTones>;

// "joy;analytical" style list in tone-index order; empty string for no tones.
std::string tone_list_string(const ToneVector& tones);

// Inverse of tone_list_string. Throws on an unknown tone name.
ToneVector parse_tone_list(std::string_view list);

}  // namespace tonepipe
