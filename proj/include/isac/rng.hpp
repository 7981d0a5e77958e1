#pragma once

#include <cstdint>
#include <limits>

namespace isac {

// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: the i-th output of stream (seed, stream) is
/// mix64(key + i * gamma) with key = mix64(seed ^ mix64(stream + gamma)).
///
/// Stream-splitting rule: every independent consumer gets its own stream id
/// under the same seed, so draws in one stream never shift another. Trials of
/// a sweep use derive_seed(base_seed, trial_index) as their seed, which makes
/// a trial's scene independent of how many trials run or in which order.
class CounterRng {
public:
    using result_type = std::uint64_t;

    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : key_(mix64(seed ^ mix64(stream + kGamma))) {}

    result_type operator()() noexcept {
        ++counter_;
        return mix64(key_ + counter_ * kGamma);
    }

    /// Uniform double in [0, 1) with 53 bits of mantissa.
    double uniform01() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    std::uint64_t counter() const noexcept { return counter_; }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Seed for trial `index` of an experiment seeded with `base`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
    return mix64(base + mix64(index + 0xD1B54A32D192ED03ULL));
}

}  // namespace isac
