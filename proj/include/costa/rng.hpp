#pragma once

#include <cstdint>
#include <random>

namespace costa {

using Rng = std::mt19937_64;

/// Role of an rng stream; part of the stream key so streams never overlap.
enum class StreamRole : std::uint32_t {
    InitialState = 1,
    AprbsU2 = 2,
    AprbsU5 = 3,
    NoiseU1 = 4,
    NoiseU3 = 5,
    NoiseU4 = 6,
    Training = 7,
};

/// Independent stream keyed by (master seed, group, index, role).
[[nodiscard]] inline Rng make_stream(std::uint64_t master, std::uint64_t group, std::uint64_t index,
                                     StreamRole role) {
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(group), static_cast<std::uint32_t>(group >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      static_cast<std::uint32_t>(role)};
    return Rng(seq);
}

/// Uniform in [lo, hi) from the top 53 bits; identical on every platform.
[[nodiscard]] inline double uniform(Rng& rng, double lo, double hi) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * unit;
}

/// Uniform integer in [lo, hi] by rejection; identical on every platform.
[[nodiscard]] inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(rng());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
}

/// Fisher-Yates shuffle driven by uniform_int.
template <typename Container>
void shuffle(Container& items, Rng& rng) {
    for (std::int64_t i = static_cast<std::int64_t>(items.size()) - 1; i > 0; --i) {
        const auto j = uniform_int(rng, 0, i);
        std::swap(items[static_cast<std::size_t>(i)], items[static_cast<std::size_t>(j)]);
    }
}

}  // namespace costa
