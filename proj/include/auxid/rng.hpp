#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace auxid {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Key for an independent substream: a pure function of (seed, keys...), so a
/// substream never depends on how many other substreams were drawn before it.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    for (const std::uint64_t k : keys) {
        h = mix64(h ^ mix64(k + 0x3c6ef372fe94f82bULL));
    }
    return h;
}

/// Standard normal draws from one substream.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t key) : engine_(key) {}

    double operator()() { return dist_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

} // namespace auxid
