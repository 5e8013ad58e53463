#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace qbandit {

/// SplitMix64 finalizer. Used to derive independent stream seeds from
/// (base seed, tag, index) tuples.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// FNV-1a; stable across platforms, unlike std::hash.
constexpr std::uint64_t hash_tag(std::string_view tag) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                    std::uint64_t index) noexcept {
    return mix64(mix64(mix64(base) ^ tag) + index);
}

/// Random stream owned by exactly one run. All variates are produced by
/// explicit transforms of the raw 64-bit engine output so that sequences are
/// identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Unit-mean exponential; the power gain of a unit-variance Rayleigh channel.
    double exponential() noexcept { return -std::log1p(-uniform()); }

    /// Uniform integer in [0, n). Lemire's multiply-shift; bias is below 2^-53 for
    /// the arm counts used here.
    std::uint64_t below(std::uint64_t n) noexcept {
        __extension__ using wide = unsigned __int128;
        return static_cast<std::uint64_t>((static_cast<wide>(engine_()) * n) >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace qbandit
