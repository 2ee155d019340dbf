#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace tonepipe {

// All randomized behavior in this project draws through these helpers on a
// std::mt19937_64. The engine's output sequence is fixed by the standard and
// the mappings below avoid std::*_distribution, whose results are
// implementation-defined, so a seed pins results across platforms.

// Uniform integer in [0, n). Rejection sampling, n >= 1.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform_unit(rng);
}

// Fisher-Yates.
template <class T>
void shuffle(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

// Indices of k items selected uniformly without replacement from [0, n).
// Partial Fisher-Yates; order of the returned indices is not meaningful.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, std::mt19937_64& rng);

}  // namespace tonepipe
