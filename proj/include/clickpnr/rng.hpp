#ifndef CLICKPNR_RNG_HPP
#define CLICKPNR_RNG_HPP

#include <cstdint>
#include <limits>

namespace clickpnr {

// SplitMix64 finalizer (Stafford mix13). Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Derive an independent seed for a named purpose (sampler, bootstrap, ...) so
// different consumers of one user seed never share a stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
    return mix64(mix64(seed + kGoldenGamma) ^ mix64(purpose + kGoldenGamma));
}

// Counter-based stream: the value sequence depends only on (seed, stream, index),
// never on which thread draws it. Streams are cheap to construct, so one can be
// keyed per shot or per bootstrap resample and generated in any order.
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : state_(mix64(mix64(seed + kGoldenGamma) + stream * kGoldenGamma)) {}

    std::uint64_t next() {
        state_ += kGoldenGamma;
        return mix64(state_);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n must be >= 1. Bias is < n / 2^64.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(next_double() * static_cast<double>(n)) % n;
    }

    // UniformRandomBitGenerator interface for <random> distributions.
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next(); }

  private:
    std::uint64_t state_;
};

}  // namespace clickpnr

#endif
