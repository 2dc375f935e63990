#pragma once

// Dormand-Prince 5(4) with the 4th-order continuous extension.
//
// The state is a fixed number of (re, im) pairs. Step-size control uses, per
// pair, |err| / (atol + rtol * max(|y_old|, |y_new|)) and takes the maximum
// over pairs, which makes the controller invariant under rotations of each
// complex amplitude and, with atol = 0, under a common rescaling of it.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "errors.hpp"

namespace ddao::ode {

struct Options {
    double rtol = 1e-9;
    double atol = 0.0;
    double h_init = 1e-4;
    double h_max = std::numeric_limits<double>::infinity();
    // Step size below this fraction of max(1, |t|) is treated as stiffness.
    double h_min_rel = 1e-13;
};

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N, class Rhs>
class Dopri5 {
    static_assert(N % 2 == 0, "state is a list of (re, im) pairs");

public:
    Dopri5(Rhs rhs, double t0, const State<N>& y0, Options opt = {})
        : rhs_(std::move(rhs)), opt_(opt), t_(t0), y_(y0), h_(opt.h_init) {
        if (!(opt_.rtol > 0)) throw InvalidArgument("rtol must be positive");
        k1_ = rhs_(t_, y_);
    }

    double time() const { return t_; }
    const State<N>& state() const { return y_; }
    std::size_t accepted_steps() const { return accepted_; }
    std::size_t rejected_steps() const { return rejected_; }

    // Replace the current state (e.g. after renormalizing a tangent vector).
    void set_state(const State<N>& y) {
        y_ = y;
        k1_ = rhs_(t_, y_);
    }

    /// Advance to exactly t_end. For every sample time s in (time(), t_end]
    /// (sorted ascending) the dense-output interpolant is passed to
    /// observe(index, s, y). Samples at or before the current time are
    /// observed from the current state.
    template <class Observer>
    void advance(double t_end, std::span<const double> samples, Observer&& observe) {
        std::size_t next = 0;
        while (next < samples.size() && samples[next] <= t_) {
            observe(next, samples[next], y_);
            ++next;
        }
        while (t_ < t_end) {
            const bool last = try_step(t_end);
            if (!accepted_last_) continue;
            while (next < samples.size() && samples[next] <= t_) {
                const double s = samples[next];
                observe(next, s, s == t_ ? y_ : interpolate(s));
                ++next;
            }
            if (last) break;
        }
    }

    void advance(double t_end) {
        advance(t_end, std::span<const double>{}, [](std::size_t, double, const State<N>&) {});
    }

private:
    // One attempted step, clipped so as not to pass t_end. Returns true when
    // an accepted step landed on t_end.
    bool try_step(double t_end) {
        // c_i and a_ij of the Dormand-Prince tableau
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                         a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                         a76 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;

        double h = std::min(h_, opt_.h_max);
        bool clipped = false;
        if (t_ + h >= t_end) {
            h = t_end - t_;
            clipped = true;
        }
        if (h < opt_.h_min_rel * std::max(1.0, std::abs(t_)))
            throw NumericsError("step size underflow at t=" + std::to_string(t_), t_);

        State<N> tmp;
        auto stage = [&](auto&&... terms) {
            for (std::size_t i = 0; i < N; ++i) tmp[i] = y_[i] + h * (... + (terms.first * (*terms.second)[i]));
            return &tmp;
        };
        using P = std::pair<double, const State<N>*>;

        const State<N>& k1 = k1_;
        stage(P{a21, &k1});
        k2_ = rhs_(t_ + c2 * h, tmp);
        stage(P{a31, &k1}, P{a32, &k2_});
        k3_ = rhs_(t_ + c3 * h, tmp);
        stage(P{a41, &k1}, P{a42, &k2_}, P{a43, &k3_});
        k4_ = rhs_(t_ + c4 * h, tmp);
        stage(P{a51, &k1}, P{a52, &k2_}, P{a53, &k3_}, P{a54, &k4_});
        k5_ = rhs_(t_ + c5 * h, tmp);
        stage(P{a61, &k1}, P{a62, &k2_}, P{a63, &k3_}, P{a64, &k4_}, P{a65, &k5_});
        k6_ = rhs_(t_ + h, tmp);
        State<N> y_new;
        for (std::size_t i = 0; i < N; ++i)
            y_new[i] = y_[i] + h * (a71 * k1[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] + a76 * k6_[i]);
        const double t_new = clipped ? t_end : t_ + h;
        k7_ = rhs_(t_new, y_new);

        double err = 0;
        for (std::size_t p = 0; p < N; p += 2) {
            const double ex = h * (e1 * k1[p] + e3 * k3_[p] + e4 * k4_[p] + e5 * k5_[p] + e6 * k6_[p] + e7 * k7_[p]);
            const double ey = h * (e1 * k1[p + 1] + e3 * k3_[p + 1] + e4 * k4_[p + 1] + e5 * k5_[p + 1] + e6 * k6_[p + 1] +
                      e7 * k7_[p + 1]);
            const double scale =
                opt_.atol + opt_.rtol * std::max(std::hypot(y_[p], y_[p + 1]), std::hypot(y_new[p], y_new[p + 1]));
            const double e = std::hypot(ex, ey);
            if (e == 0) continue;
            err = std::max(err, scale > 0 ? e / scale : std::numeric_limits<double>::infinity());
        }
        for (double v : y_new)
            if (!std::isfinite(v)) err = std::numeric_limits<double>::infinity();

        // Standard controller; exponent 1/5 for the 4th-order error estimate.
        const double fac = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        if (err <= 1.0) {
            prepare_dense(h, y_new);
            t_prev_ = t_;
            h_prev_ = h;
            y_ = y_new;
            t_ = t_new;
            k1_ = k7_;
            // Keep the unclipped proposal so a short landing step does not
            // throttle the next segment.
            h_ = clipped ? std::max(h_, h * fac) : h * fac;
            accepted_last_ = true;
            ++accepted_;
            return clipped;
        }
        h_ = h * std::max(fac, 0.1);
        accepted_last_ = false;
        ++rejected_;
        return false;
    }

    void prepare_dense(double h, const State<N>& y_new) {
        constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                         d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                         d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
        for (std::size_t i = 0; i < N; ++i) {
            const double ydiff = y_new[i] - y_[i];
            const double bspl = h * k1_[i] - ydiff;
            r1_[i] = y_[i];
            r2_[i] = ydiff;
            r3_[i] = bspl;
            r4_[i] = ydiff - h * k7_[i] - bspl;
            r5_[i] = h * (d1 * k1_[i] + d3 * k3_[i] + d4 * k4_[i] + d5 * k5_[i] + d6 * k6_[i] + d7 * k7_[i]);
        }
    }

    State<N> interpolate(double s) const {
        const double th = (s - t_prev_) / h_prev_;
        const double th1 = 1 - th;
        State<N> out;
        for (std::size_t i = 0; i < N; ++i)
            out[i] = r1_[i] + th * (r2_[i] + th1 * (r3_[i] + th * (r4_[i] + th1 * r5_[i])));
        return out;
    }

    Rhs rhs_;
    Options opt_;
    double t_;
    State<N> y_;
    double h_;
    State<N> k1_{}, k2_{}, k3_{}, k4_{}, k5_{}, k6_{}, k7_{};
    State<N> r1_{}, r2_{}, r3_{}, r4_{}, r5_{};
    double t_prev_ = 0, h_prev_ = 1;
    bool accepted_last_ = false;
    std::size_t accepted_ = 0, rejected_ = 0;
};

template <std::size_t N, class Rhs>
Dopri5<N, Rhs> make_dopri5(Rhs rhs, double t0, const State<N>& y0, Options opt = {}) {
    return Dopri5<N, Rhs>(std::move(rhs), t0, y0, opt);
}

}  // namespace ddao::ode
