#include <algorithm>

#include <gtest/gtest.h>

#include "ddao/classical.hpp"

using namespace ddao;

namespace {

const SystemParams fig1a{0.7, -15, 5, 10.2, 10.2, 1, 0};
const SystemParams fig1b{0.5, -25, 15, 25, 25, 1, 0};
const SystemParams fig1c{0.1, -15, 5, 27, 27, 1, 0};

}  // namespace

TEST(ClassicalRhs, DriveOnlyAtOrigin) {
    const Complex d = classical_rhs(0, 0, fig1a);
    EXPECT_NEAR(d.real(), 0, 1e-15);
    EXPECT_NEAR(d.imag(), -20.4, 1e-13);
}

TEST(ClassicalRhs, PureDecay) {
    const SystemParams p{0, 0, 5, 0, 0, 2, 0};
    EXPECT_NEAR(std::abs(classical_rhs(1, 0, p) - Complex(-1)), 0, 1e-15);
}

TEST(ClassicalRhs, ModulationPhase) {
    // gamma is nominally 0 here; classical_rhs does not validate.
    const SystemParams p{0, 0, 5, 0, 5, 0, 0};
    const Complex d = classical_rhs(1, std::numbers::pi / 5, p);
    EXPECT_NEAR(std::abs(d - Complex(0, 5)), 0, 1e-12);
}

TEST(Integrate, LinearClosedForm) {
    const SystemParams p{0, 3, 1, 0, 0, 2, 0};
    const auto s = integrate_classical(1, 0, 1, p, 1e-10);
    const Complex expected = std::exp(Complex(-1, -3));
    EXPECT_NEAR(std::abs(s.back().point.alpha() - expected), 0, 1e-8);
    EXPECT_DOUBLE_EQ(s.back().t, 1.0);
}

TEST(Integrate, DenseOutputMatchesClosedForm) {
    const SystemParams p{0, 3, 1, 0, 0, 2, 0};
    const auto s = integrate_classical(1, 0, 2, p, 1e-10, std::size_t(41));
    ASSERT_EQ(s.size(), 41u);
    for (const auto& x : s)
        EXPECT_NEAR(std::abs(x.point.alpha() - std::exp(Complex(-1, -3) * x.t)), 0, 1e-8) << "t=" << x.t;
}

TEST(Integrate, BoundedByDriveStrength) {
    const auto s = integrate_classical(0, 0, 50, fig1c, 1e-9, std::size_t(20001));
    double r = 0;
    for (const auto& x : s) r = std::max(r, x.point.radius());
    EXPECT_LE(r, 54.0);
}

TEST(Integrate, HalvingToleranceIsSelfConsistent) {
    for (double t1 : {1.0, 2.0})
        for (double tol : {1e-6, 1e-8, 1e-10}) {
            const auto a = integrate_classical(0, 0, t1, fig1a, tol).back().point.alpha();
            const auto b = integrate_classical(0, 0, t1, fig1a, tol / 2).back().point.alpha();
            EXPECT_LT(std::abs(a - b), 10 * tol * std::abs(a)) << "t1=" << t1 << " tol=" << tol;
        }
}

TEST(Integrate, ErrorShrinksWithTolerance) {
    // Global error is not bounded by tol on this sensitive flow, but it must
    // fall as tol does.
    const auto ref = integrate_classical(0, 0, 3, fig1a, 1e-13).back().point.alpha();
    double previous = 1;
    for (double tol : {1e-5, 1e-7, 1e-9, 1e-11}) {
        const double err = std::abs(integrate_classical(0, 0, 3, fig1a, tol).back().point.alpha() - ref);
        EXPECT_LT(err, previous) << "tol=" << tol;
        EXPECT_LT(err, 1e3 * tol * std::abs(ref)) << "tol=" << tol;
        previous = err;
    }
}

TEST(Integrate, RejectsBadArguments) {
    EXPECT_THROW(integrate_classical(0, 0, 1, fig1a, 1e-2), InvalidArgument);
    EXPECT_THROW(integrate_classical(0, 0, 1, fig1a, 1e-15), InvalidArgument);
    EXPECT_THROW(integrate_classical(0, 1, 1, fig1a, 1e-9), InvalidArgument);
    const std::vector<double> unsorted{0.5, 0.2};
    EXPECT_THROW(integrate_classical(0, 0, 1, fig1a, 1e-9, std::span<const double>(unsorted)), InvalidArgument);
}

TEST(Ode, BlowupReportsLastGoodTime) {
    // y' = y^2, y(0) = 1 diverges at t = 1.
    auto rhs = [](double, const ode::State<2>& y) { return ode::State<2>{y[0] * y[0], 0.0}; };
    auto solver = ode::make_dopri5<2>(rhs, 0.0, {1.0, 0.0}, {.rtol = 1e-9});
    try {
        solver.advance(2.0);
        FAIL() << "expected NumericsError";
    } catch (const NumericsError& e) {
        EXPECT_GT(e.time, 0.99);
        EXPECT_LT(e.time, 1.0);
    }
}

TEST(Poincare, InsideAmplitudeBound) {
    const auto set = poincare_section(fig1a, 0, 0, 5000);
    ASSERT_EQ(set.points.size(), 5000u);
    EXPECT_EQ(set.skipped, 200u);
    for (const auto& p : set.points) ASSERT_LE(p.radius(), 20.4 + 1e-6);
}

TEST(Poincare, FastModulationIsRegular) {
    const SystemParams p{0.1, -15, 50, 27, 27, 1, 0};
    const auto set = poincare_section(p, 0, 0, 500);
    double diameter = 0;
    for (const auto& a : set.points)
        for (const auto& b : set.points) diameter = std::max(diameter, std::abs(a.alpha() - b.alpha()));
    EXPECT_LT(diameter, 1.0);
}

TEST(Poincare, EmptyRequest) {
    const auto set = poincare_section(fig1a, 0, 0, 0, 7);
    EXPECT_TRUE(set.points.empty());
    EXPECT_EQ(set.skipped, 7u);
}

TEST(Poincare, RequiresModulation) {
    SystemParams p = fig1a;
    p.delta_mod = 0;
    EXPECT_THROW(poincare_section(p, 0, 0, 10), InvalidArgument);
}

TEST(Poincare, AgreesWithDenseTrajectory) {
    const auto set = poincare_section(fig1a, Complex(0.3, -0.2), 0.1, 8, 0, 1e-10);
    std::vector<double> times;
    for (std::size_t k = 1; k <= 8; ++k) times.push_back(0.1 + set.period * double(k));
    const auto s = integrate_classical(Complex(0.3, -0.2), 0.1, times.back(), fig1a, 1e-10,
                                       std::span<const double>(times));
    ASSERT_EQ(s.size(), set.points.size());
    for (std::size_t k = 0; k < s.size(); ++k)
        EXPECT_LT(std::abs(s[k].point.alpha() - set.points[k].alpha()), 1e-6 * (1 + s[k].point.radius()));
}

TEST(Lyapunov, LinearSystemContractsAtHalfGamma) {
    SystemParams p = fig1a;
    p.chi = 0;
    const auto e = lyapunov_periodic(p, {.periods = 400, .transient_periods = 50});
    EXPECT_NEAR(e.lambda_max, -0.5, 0.02);
    EXPECT_TRUE(e.converged);
    EXPECT_GE(e.n_renorm, 100u);
    EXPECT_EQ(classify(e.lambda_max), Regime::regular);
}

TEST(Lyapunov, ChaoticWindowParameters) {
    const auto e = lyapunov_periodic(fig1a);
    EXPECT_GT(e.lambda_max, 0) << "lambda_max=" << e.lambda_max;
}

TEST(Lyapunov, WeakSecondDriveIsRegular) {
    SystemParams p = fig1a;
    p.omega2 = 1;
    EXPECT_LT(lyapunov_periodic(p).lambda_max, 0);
}

TEST(Lyapunov, StrongSecondDriveIsRegular) {
    SystemParams p = fig1a;
    p.omega2 = 20;
    EXPECT_LT(lyapunov_periodic(p).lambda_max, 0);
}

TEST(Lyapunov, FastAndSlowModulationAreRegular) {
    SystemParams fast = fig1c;
    fast.delta_mod = 50;
    EXPECT_LT(lyapunov_periodic(fast).lambda_max, 0);
    SystemParams slow = fig1a;
    slow.delta_mod = 0.2;
    EXPECT_LT(lyapunov_periodic(slow, {.periods = 150, .transient_periods = 30}).lambda_max, 0);
}

TEST(Lyapunov, RejectsTooShortRun) {
    EXPECT_THROW(lyapunov_max(fig1a, 0, 10, 1, 1e-9, 20), InvalidArgument);
    EXPECT_THROW(lyapunov_max(fig1a, 0, 10, 0), InvalidArgument);
}

TEST(Classify, Band) {
    EXPECT_EQ(classify(0.05), Regime::chaotic);
    EXPECT_EQ(classify(-0.05), Regime::regular);
    EXPECT_EQ(classify(0.01), Regime::inconclusive);
    EXPECT_EQ(classify(0.01, 0.1), Regime::chaotic);
}

TEST(Scaling, IdentityAndInverse) {
    EXPECT_EQ(scaling_transform(fig1a, 1), fig1a);
    const auto q = scaling_transform(scaling_transform(fig1a, 2.7), 1 / 2.7);
    EXPECT_NEAR(q.chi, fig1a.chi, 1e-12);
    EXPECT_NEAR(q.delta, fig1a.delta, 1e-12);
    EXPECT_NEAR(q.omega1, fig1a.omega1, 1e-12);
    EXPECT_NEAR(q.omega2, fig1a.omega2, 1e-12);
    EXPECT_THROW(scaling_transform(fig1a, 0), InvalidArgument);
    EXPECT_THROW(scaling_transform(fig1a, -1), InvalidArgument);
}

TEST(Scaling, SevenfoldReduction) {
    const auto q = scaling_transform(fig1a, std::sqrt(7.0));
    EXPECT_NEAR(q.chi, 0.1, 1e-14);
    EXPECT_NEAR(q.delta, -14.4, 1e-13);
    EXPECT_NEAR(q.omega1, 26.987, 1e-3);
    EXPECT_NEAR(q.omega2, 26.987, 1e-3);
    EXPECT_EQ(q.delta_mod, fig1a.delta_mod);
    EXPECT_EQ(q.gamma, fig1a.gamma);
}

TEST(Scaling, TrajectoriesScalePointwise) {
    const double lambda = std::sqrt(7.0);
    const auto q = scaling_transform(fig1a, lambda);
    const Complex a0(0.4, -0.3);
    const auto a = integrate_classical(a0, 0, 10, fig1a, 1e-12, std::size_t(101));
    const auto b = integrate_classical(lambda * a0, 0, 10, q, 1e-12, std::size_t(101));
    for (std::size_t k = 0; k < a.size(); ++k)
        EXPECT_LT(std::abs(b[k].point.alpha() - lambda * a[k].point.alpha()), 1e-6 * std::abs(b[k].point.alpha()));
}

TEST(AmplitudeBound, Values) {
    EXPECT_DOUBLE_EQ(amplitude_bound(fig1a), 20.4);
    EXPECT_DOUBLE_EQ(amplitude_bound({0.7, -15, 5, 0, 0, 1, 0}), 0.0);
    EXPECT_DOUBLE_EQ(amplitude_bound({0.1, -15, 5, 27, 27, 3, 0}), 18.0);
}

TEST(AmplitudeBound, HoldsForAllRecipeSets) {
    for (const auto& p : {fig1a, fig1b, fig1c}) {
        const auto set = poincare_section(p, 0, 0, 500);
        for (const auto& x : set.points) ASSERT_LE(x.radius(), amplitude_bound(p) + 1e-6);
    }
}

TEST(ChaosWindow, FindsSignChangesOfAKnownFunction) {
    // lambda_max of the linear system is -1/2 everywhere: no window.
    SystemParams p = fig1a;
    p.chi = 0;
    const auto w = chaos_window(p, 7, 9, 1, 0.01, {.periods = 150, .transient_periods = 20});
    EXPECT_EQ(w.scan.size(), 3u);
    EXPECT_FALSE(w.onset);
    EXPECT_FALSE(w.vanishing);
}
