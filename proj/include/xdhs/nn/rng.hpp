#pragma once

#include <array>
#include <cstdint>

namespace xdhs::nn {

// xoshiro256** seeded through SplitMix64. The output stream depends only on
// the seed, so runs reproduce across platforms and compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent stream for a (seed, stream id) pair.
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    // Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double low, double high) { return low + (high - low) * uniform(); }

    // Uniform integer in [0, bound), rejection sampled (no modulo bias).
    std::uint64_t below(std::uint64_t bound);

    // Standard normal via Box-Muller; the sine branch is cached for the next call.
    double normal();

    const std::array<std::uint64_t, 4>& state() const { return state_; }

private:
    std::array<std::uint64_t, 4> state_{};
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

std::uint64_t splitmix64(std::uint64_t& state);

} // namespace xdhs::nn
