#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace toprank {

// Mixes (master, stream, index) into an independent 64-bit seed with the
// splitmix64 finalizer. Episode k of stream s is reproducible in isolation.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

namespace streams {
inline constexpr std::uint64_t kEpisode = 1;
inline constexpr std::uint64_t kCrossingTrial = 2;
inline constexpr std::uint64_t kFailureEpisode = 3;
inline constexpr std::uint64_t kPairBias = 4;
}  // namespace streams

// Thin wrapper over mt19937_64. Uniform doubles and bounded integers are
// produced here rather than with <random> distributions so that streams are
// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform on {0, ..., n-1}; n must be positive.
    std::size_t below(std::size_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace toprank
