#pragma once

// Semiclassical amplitude equation of the double-driven Kerr oscillator:
//
//   d(alpha)/dt = -(gamma/2) alpha - i (Delta + chi (1 + 2|alpha|^2)) alpha
//                 - i (Omega1 + Omega2 exp(-i delta t))
//
// integrated as a real 2-D system (X, Y) = (Re alpha, Im alpha), with
// stroboscopic Poincare sections, a tangent-space Lyapunov estimator, the
// amplitude bound and the scaling symmetry of the equation.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fock.hpp"
#include "ode.hpp"

namespace ddao {

struct PhasePoint {
    double x = 0;  // Re alpha
    double y = 0;  // Im alpha

    Complex alpha() const { return {x, y}; }
    double radius() const { return std::hypot(x, y); }
};

struct TrajectorySample {
    double t;
    PhasePoint point;
};

struct PoincareSet {
    double t0 = 0;
    double period = 0;
    std::size_t skipped = 0;
    std::vector<PhasePoint> points;
};

struct LyapunovEstimate {
    double lambda_max = 0;
    std::size_t n_renorm = 0;
    bool converged = false;
};

enum class Regime { regular, chaotic, inconclusive };

inline const char* to_string(Regime r) {
    switch (r) {
    case Regime::regular: return "regular";
    case Regime::chaotic: return "chaotic";
    case Regime::inconclusive: return "inconclusive";
    }
    return "?";
}

namespace classical_defaults {
inline constexpr double tol = 1e-9;
inline constexpr std::size_t transient_periods = 200;
// Chaos classification band, units of gamma.
inline constexpr double regime_threshold = 0.02;
// Tail-window agreement required for a converged Lyapunov estimate.
inline constexpr double lyapunov_agreement = 0.05;
inline constexpr std::size_t lyapunov_min_renorm = 100;
}  // namespace classical_defaults

inline Complex classical_rhs(Complex alpha, double t, const SystemParams& p) {
    const double w = p.delta + p.chi * (1 + 2 * std::norm(alpha));
    return -0.5 * p.gamma * alpha - I * w * alpha - I * (p.omega1 + p.omega2 * std::exp(-I * (p.delta_mod * t)));
}

namespace detail {

// Real form of classical_rhs, written out so the tangent system below shares it.
struct ClassicalField {
    SystemParams p;

    ode::State<2> operator()(double t, const ode::State<2>& s) const {
        const double x = s[0], y = s[1];
        const double w = p.delta + p.chi * (1 + 2 * (x * x + y * y));
        const double sn = std::sin(p.delta_mod * t), cs = std::cos(p.delta_mod * t);
        return {-0.5 * p.gamma * x + w * y - p.omega2 * sn, -0.5 * p.gamma * y - w * x - p.omega1 - p.omega2 * cs};
    }
};

// (x, y, u, v): the flow plus its linearization acting on the tangent (u, v).
struct TangentField {
    SystemParams p;

    ode::State<4> operator()(double t, const ode::State<4>& s) const {
        const double x = s[0], y = s[1], u = s[2], v = s[3];
        const double g = 0.5 * p.gamma;
        const double w = p.delta + p.chi * (1 + 2 * (x * x + y * y));
        const double sn = std::sin(p.delta_mod * t), cs = std::cos(p.delta_mod * t);
        const double c4 = 4 * p.chi;
        const double jxx = -g + c4 * x * y, jxy = w + c4 * y * y;
        const double jyx = -w - c4 * x * x, jyy = -g - c4 * x * y;
        return {-g * x + w * y - p.omega2 * sn, -g * y - w * x - p.omega1 - p.omega2 * cs, jxx * u + jxy * v,
                jyx * u + jyy * v};
    }
};

inline void check_tol(double tol) {
    if (!(tol > 1e-14 && tol <= 1e-3)) throw InvalidArgument("tolerance must lie in (1e-14, 1e-3]");
}

}  // namespace detail

/// Integrates from (t0, alpha0) to t1 and returns the dense-output state at
/// each requested sample time (ascending, within [t0, t1]). Step-size
/// underflow raises NumericsError carrying the last good time.
inline std::vector<TrajectorySample> integrate_classical(Complex alpha0, double t0, double t1,
                                                         const SystemParams& p, double tol,
                                                         std::span<const double> sample_times) {
    p.validate();
    detail::check_tol(tol);
    if (!(t1 > t0)) throw InvalidArgument("t1 must exceed t0");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        if (sample_times[i] < t0 || sample_times[i] > t1) throw InvalidArgument("sample time outside [t0, t1]");
        if (i > 0 && sample_times[i] < sample_times[i - 1]) throw InvalidArgument("sample times must be sorted");
    }
    auto solver = ode::make_dopri5<2>(detail::ClassicalField{p}, t0, {alpha0.real(), alpha0.imag()},
                                      {.rtol = tol});
    std::vector<TrajectorySample> out;
    out.reserve(sample_times.size());
    solver.advance(t1, sample_times, [&](std::size_t, double s, const ode::State<2>& y) {
        out.push_back({s, {y[0], y[1]}});
    });
    return out;
}

/// Convenience overload: n_samples equally spaced times including both ends.
inline std::vector<TrajectorySample> integrate_classical(Complex alpha0, double t0, double t1,
                                                         const SystemParams& p, double tol,
                                                         std::size_t n_samples = 2) {
    std::vector<double> times(std::max<std::size_t>(n_samples, 2));
    for (std::size_t i = 0; i < times.size(); ++i)
        times[i] = t0 + (t1 - t0) * double(i) / double(times.size() - 1);
    times.back() = t1;
    return integrate_classical(alpha0, t0, t1, p, tol, std::span<const double>(times));
}

/// Stroboscopic section: alpha(t_n) at t_n = t0 + n * 2 pi / delta for
/// n_skip < n <= n_skip + n_points, from one continuous integration.
inline PoincareSet poincare_section(const SystemParams& p, Complex alpha0, double t0, std::size_t n_points,
                                    std::size_t n_skip = classical_defaults::transient_periods,
                                    double tol = classical_defaults::tol) {
    p.validate();
    detail::check_tol(tol);
    PoincareSet set{t0, p.modulation_period(), n_skip, {}};
    if (n_points == 0) return set;
    std::vector<double> times(n_points);
    for (std::size_t k = 0; k < n_points; ++k) times[k] = t0 + set.period * double(n_skip + 1 + k);
    auto solver = ode::make_dopri5<2>(detail::ClassicalField{p}, t0, {alpha0.real(), alpha0.imag()},
                                      {.rtol = tol});
    set.points.reserve(n_points);
    solver.advance(times.back(), times, [&](std::size_t, double, const ode::State<2>& y) {
        set.points.push_back({y[0], y[1]});
    });
    return set;
}

/// Largest Lyapunov exponent by co-integrating the linearized flow and
/// renormalizing the tangent vector every renorm_period. The first
/// `transient` time units are integrated but not averaged. The estimate is
/// marked converged when the growth rates over the two quarters of the tail
/// half agree within lyapunov_agreement.
inline LyapunovEstimate lyapunov_max(const SystemParams& p, Complex alpha0, double t_total, double renorm_period,
                                     double tol = classical_defaults::tol, double transient = -1) {
    p.validate();
    detail::check_tol(tol);
    if (!(renorm_period > 0)) throw InvalidArgument("renorm_period must be positive");
    if (transient < 0) transient = std::min(t_total / 4, renorm_period * classical_defaults::transient_periods);
    if (!(t_total > transient)) throw InvalidArgument("t_total must exceed the transient");

    auto solver = ode::make_dopri5<4>(detail::TangentField{p}, 0.0,
                                      {alpha0.real(), alpha0.imag(), 1.0, 0.0}, {.rtol = tol});
    const auto n_transient = std::size_t(std::ceil(transient / renorm_period));
    const auto n_total = std::size_t(std::floor(t_total / renorm_period));
    std::vector<double> logs;
    logs.reserve(n_total > n_transient ? n_total - n_transient : 0);

    for (std::size_t k = 1; k <= n_total; ++k) {
        solver.advance(renorm_period * double(k));
        auto s = solver.state();
        const double growth = std::hypot(s[2], s[3]);
        s[2] /= growth;
        s[3] /= growth;
        solver.set_state(s);
        if (k > n_transient) logs.push_back(std::log(growth));
    }

    LyapunovEstimate est;
    est.n_renorm = logs.size();
    if (logs.empty()) return est;
    auto rate = [&](std::size_t b, std::size_t e) {
        return std::accumulate(logs.begin() + b, logs.begin() + e, 0.0) / (double(e - b) * renorm_period);
    };
    est.lambda_max = rate(0, logs.size());
    const std::size_t n = logs.size();
    if (n >= classical_defaults::lyapunov_min_renorm) {
        const double q3 = rate(n / 2, 3 * n / 4);
        const double q4 = rate(3 * n / 4, n);
        est.converged = std::abs(q3 - q4) <= classical_defaults::lyapunov_agreement * p.gamma;
    }
    return est;
}

inline Regime classify(double lambda_max, double gamma = 1.0) {
    const double band = classical_defaults::regime_threshold * gamma;
    if (lambda_max > band) return Regime::chaotic;
    if (lambda_max < -band) return Regime::regular;
    return Regime::inconclusive;
}

/// Lyapunov run measured in modulation periods, renormalizing once per period.
struct LyapunovSettings {
    Complex alpha0 = 0;
    std::size_t periods = 1000;
    std::size_t transient_periods = classical_defaults::transient_periods;
    double tol = classical_defaults::tol;
};

inline LyapunovEstimate lyapunov_periodic(const SystemParams& p, const LyapunovSettings& s = {}) {
    const double period = p.modulation_period();
    return lyapunov_max(p, s.alpha0, period * double(s.periods), period, s.tol,
                        period * double(s.transient_periods));
}

struct ChaosWindow {
    std::optional<double> onset;      // lowest sign change - to +
    std::optional<double> vanishing;  // highest sign change + to -
    std::vector<std::pair<double, double>> scan;  // (omega2, lambda_max) on the coarse grid
};

/// Brackets the Omega2 interval with lambda_max > 0: a coarse scan over
/// [lo, hi] followed by bisection on the sign of lambda_max down to `resolution`.
inline ChaosWindow chaos_window(SystemParams p, double lo, double hi, double step, double resolution,
                                const LyapunovSettings& s = {}) {
    if (!(hi > lo) || !(step > 0) || !(resolution > 0)) throw InvalidArgument("invalid Omega2 scan range");
    auto lambda = [&](double w2) {
        p.omega2 = w2;
        return lyapunov_periodic(p, s).lambda_max;
    };
    ChaosWindow out;
    const auto n = std::size_t(std::floor((hi - lo) / step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) {
        const double w2 = lo + step * double(k);
        out.scan.emplace_back(w2, lambda(w2));
    }
    // Bisection keeps `a` on the side where (lambda > 0) == a_positive.
    auto bisect = [&](double a, double b, bool a_positive) {
        while (b - a > resolution) {
            const double m = 0.5 * (a + b);
            ((lambda(m) > 0) == a_positive ? a : b) = m;
        }
        return 0.5 * (a + b);
    };
    for (std::size_t k = 0; k + 1 < out.scan.size(); ++k) {
        if (out.scan[k].second <= 0 && out.scan[k + 1].second > 0) {
            out.onset = bisect(out.scan[k].first, out.scan[k + 1].first, false);
            break;
        }
    }
    for (std::size_t k = out.scan.size() - 1; k > 0; --k) {
        if (out.scan[k - 1].second > 0 && out.scan[k].second <= 0) {
            out.vanishing = bisect(out.scan[k - 1].first, out.scan[k].first, true);
            break;
        }
    }
    return out;
}

/// alpha -> lambda alpha leaves the amplitude equation invariant when
/// (chi, Delta, Omega1, Omega2) -> (chi/l^2, Delta + chi (1 - 1/l^2), l Omega1, l Omega2).
inline SystemParams scaling_transform(const SystemParams& p, double lambda) {
    if (!(lambda > 0) || !std::isfinite(lambda)) throw InvalidArgument("scaling factor must be positive");
    SystemParams q = p;
    const double inv2 = 1.0 / (lambda * lambda);
    q.chi = p.chi * inv2;
    q.delta = p.delta + p.chi * (1 - inv2);
    q.omega1 = lambda * p.omega1;
    q.omega2 = lambda * p.omega2;
    return q;
}

/// Upper bound (|Omega1| + |Omega2|)/gamma on the asymptotic |alpha|.
inline double amplitude_bound(const SystemParams& p) {
    if (!(p.gamma > 0)) throw InvalidArgument("gamma must be positive");
    return (std::abs(p.omega1) + std::abs(p.omega2)) / p.gamma;
}

}  // namespace ddao
