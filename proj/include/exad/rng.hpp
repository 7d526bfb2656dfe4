#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace exad {

// splitmix64 finalizer (Vigna's reference constants). Used to spread seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed for the k-th independent stream derived from one master seed.
/// This is the (k+1)-th output of splitmix64 started at `master`, so
/// per-tree / per-run / per-step streams never overlap by construction
/// and results do not depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) {
    return mix64(master + k * 0x9e3779b97f4a7c15ULL);
}

/// Deterministic random source: mt19937_64 (bit-stable across standard
/// libraries) with hand-rolled uniform/normal draws. std::*_distribution is
/// implementation-defined, which would break byte-identical reruns between
/// toolchains, so the distributions live here instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi). Requires lo <= hi; lo == hi returns lo.
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Standard normal via Box-Muller. Always consumes exactly two uniform
    /// draws and keeps no cached spare, so the draw sequence per call is
    /// fixed and easy to replay in tests.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    /// Unbiased integer in [0, n); rejection-samples to avoid modulo bias.
    std::size_t uniform_index(std::size_t n) {
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t draw = engine_();
        while (draw >= limit) draw = engine_();
        return static_cast<std::size_t>(draw % bound);
    }

private:
    static constexpr double kTwoPi = 6.28318530717958647692;
    std::mt19937_64 engine_;
};

/// Anything that can stand in for Rng in the sampling routines. Tests inject
/// stub sources (e.g. zero noise) through this.
template <typename R>
concept RandomSource = requires(R r, double lo, double hi, std::size_t n) {
    { r.uniform(lo, hi) } -> std::convertible_to<double>;
    { r.normal() } -> std::convertible_to<double>;
    { r.uniform_index(n) } -> std::convertible_to<std::size_t>;
};

/// k distinct indices from [0, n), uniformly without replacement
/// (partial Fisher-Yates). Order of the result is the draw order.
template <RandomSource R>
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, R& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        std::size_t j = i + rng.uniform_index(n - i);
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

} // namespace exad
