#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace ddao {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Seed of trajectory `index` under `master`; independent of scheduling.
inline constexpr std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Counter-based generator: output k is a keyed hash of k.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit CounterRng(std::uint64_t key = 0) : key_(splitmix64(key)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept { return splitmix64(key_ ^ splitmix64(counter_++)); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Complex Wiener increments d(xi) = (g1 + i g2) sqrt(dt/2), one per channel,
/// so that M(dxi) = 0, M(dxi^2) = 0, M(|dxi|^2) = dt.
class WienerSource {
public:
    explicit WienerSource(std::uint64_t seed) : rng_(seed) {}

    void fill(double dt, std::span<std::complex<double>> out) {
        const double s = std::sqrt(0.5 * dt);
        for (auto& z : out) {
            const double g1 = normal_(rng_);
            const double g2 = normal_(rng_);
            z = {g1 * s, g2 * s};
        }
    }

private:
    CounterRng rng_;
    std::normal_distribution<double> normal_;
};

inline std::vector<std::complex<double>> wiener_increments(WienerSource& src, double dt, std::size_t n_channels) {
    std::vector<std::complex<double>> out(n_channels);
    src.fill(dt, out);
    return out;
}

}  // namespace ddao
