#include <random>
#include <set>

#include <gtest/gtest.h>

#include "ddao/rng.hpp"

using namespace ddao;

static_assert(std::uniform_random_bit_generator<CounterRng>);

TEST(Noise, MomentsOfComplexIncrements) {
    WienerSource src(2024);
    const double dt = 0.01;
    const std::size_t n = 1'000'000;
    std::vector<std::complex<double>> buf(1000);
    std::complex<double> mean = 0, mean_sq = 0;
    double mean_abs = 0;
    for (std::size_t k = 0; k < n / buf.size(); ++k) {
        src.fill(dt, buf);
        for (auto z : buf) {
            mean += z;
            mean_sq += z * z;
            mean_abs += std::norm(z);
        }
    }
    mean /= double(n);
    mean_sq /= double(n);
    mean_abs /= double(n);
    EXPECT_LT(std::abs(mean), 4e-4);
    EXPECT_LT(std::abs(mean_sq), 4e-4);
    EXPECT_LT(std::abs(mean_abs - dt), 4e-5);
}

TEST(Noise, SameSeedSameSequence) {
    WienerSource a(77), b(77);
    const auto x = wiener_increments(a, 1e-4, 1000);
    const auto y = wiener_increments(b, 1e-4, 1000);
    EXPECT_EQ(x, y);
}

TEST(Noise, DifferentSeedsDiffer) {
    WienerSource a(1), b(2);
    EXPECT_NE(wiener_increments(a, 1e-4, 8), wiener_increments(b, 1e-4, 8));
}

TEST(Noise, IncrementScaleFollowsStep) {
    WienerSource a(5), b(5);
    const auto x = wiener_increments(a, 1e-2, 16);
    const auto y = wiener_increments(b, 4e-2, 16);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(std::abs(y[k] - 2.0 * x[k]), 0, 1e-15);
}

TEST(Seeds, TrajectorySeedsAreDistinctAndStable) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(trajectory_seed(42, i));
    EXPECT_EQ(seen.size(), 10000u);
    EXPECT_EQ(trajectory_seed(42, 17), trajectory_seed(42, 17));
    EXPECT_NE(trajectory_seed(42, 17), trajectory_seed(43, 17));
}

TEST(Seeds, CounterGeneratorIsAPureFunctionOfPosition) {
    CounterRng a(9), b(9);
    for (int k = 0; k < 5; ++k) a();
    EXPECT_EQ(a.counter(), 5u);
    for (int k = 0; k < 5; ++k) b();
    EXPECT_EQ(a(), b());
}

TEST(Seeds, UniformBitsLookUniform) {
    CounterRng g(3);
    std::uniform_real_distribution<double> u;
    double s = 0;
    const int n = 200000;
    for (int k = 0; k < n; ++k) s += u(g);
    EXPECT_NEAR(s / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
}
