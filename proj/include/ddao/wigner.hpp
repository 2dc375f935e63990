#pragma once

// Wigner function from Fock-basis density matrix elements,
//
//   W(X, Y) = sum_{m,n} rho_nm W_mn(r, theta),  X = r cos(theta), Y = r sin(theta),
//
// with, for m >= n and k = m - n,
//
//   W_mn = (2/pi) (-1)^n sqrt(n!/m!) e^{i k theta} (2r)^k e^{-2 r^2} L_n^k(4 r^2)
//
// and W_nm = conj(W_mn). Normalization: integral of W dX dY = 1.
//
// The factor sqrt(n!/m!) (2r)^k e^{-2r^2} L_n^k is evaluated as a scaled
// three-term recurrence over the normalized Laguerre functions, with an
// explicit log-scale, so no factorial or power is formed directly.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "density.hpp"

namespace ddao {

namespace detail {

// Normalized Laguerre functions for fixed order k at x = 4 r^2:
//   h_j = sqrt(j!/(j+k)!) (2r)^k e^{-2r^2} L_j^k(4r^2),  j = 0..count-1.
// Values whose log-magnitude falls below -700 are returned as 0.
class LaguerreLadder {
public:
    void evaluate(int k, double r, int count, std::vector<double>& out) {
        out.assign(count, 0.0);
        if (count <= 0) return;
        const double x = 4 * r * r;
        double log_scale;
        if (k == 0)
            log_scale = -2 * r * r;
        else if (r == 0)
            return;  // (2r)^k vanishes
        else
            log_scale = k * std::log(2 * r) - 2 * r * r - 0.5 * std::lgamma(k + 1.0);

        constexpr double floor_log = -700;
        const double floor_value = std::exp(floor_log);
        double factor = log_scale >= floor_log ? std::exp(log_scale) : 0.0;
        double prev = 0.0, cur = 1.0;
        for (int j = 0; j < count; ++j) {
            if (j == 1) {
                prev = cur;
                cur = (1.0 + k - x) / std::sqrt(k + 1.0) * prev;
            } else if (j > 1) {
                const double jm = j - 1;  // recurrence index
                const double next =
                    ((2 * jm + 1 + k - x) * cur - std::sqrt(jm * (jm + k)) * prev) / std::sqrt(j * (j + double(k)));
                prev = cur;
                cur = next;
            }
            const double a = std::abs(cur);
            if (a > 1e150) {
                prev /= a;
                cur /= a;
                log_scale += std::log(a);
                factor = log_scale >= floor_log ? std::exp(log_scale) : 0.0;
            }
            if (factor != 0) {
                const double v = cur * factor;
                out[j] = std::abs(v) < floor_value ? 0.0 : v;
            } else if (cur != 0) {
                const double lg = log_scale + std::log(std::abs(cur));
                out[j] = lg < floor_log ? 0.0 : std::copysign(std::exp(lg), cur);
            }
        }
    }
};

}  // namespace detail

/// W_mn(r, theta); exactly the conjugate of W_nm by construction.
inline Complex wigner_coefficient(int m, int n, double r, double theta) {
    if (m < 0 || n < 0) throw InvalidArgument("Fock indices must be non-negative");
    if (!(r >= 0)) throw InvalidArgument("radius must be non-negative");
    const bool swap = n > m;
    const int hi = swap ? n : m, lo = swap ? m : n;
    const int k = hi - lo;
    std::vector<double> h;
    detail::LaguerreLadder{}.evaluate(k, r, lo + 1, h);
    const double sign = (lo % 2 == 0) ? 1.0 : -1.0;
    const Complex w = (2 / std::numbers::pi) * sign * h[lo] * std::polar(1.0, k * theta);
    return swap ? std::conj(w) : w;
}

struct GridSpec {
    double x_min = -4, x_max = 4, y_min = -4, y_max = 4;
    int nx = 256, ny = 256;

    static GridSpec square(double extent, int n = 256) { return {-extent, extent, -extent, extent, n, n}; }

    double dx() const { return (x_max - x_min) / (nx - 1); }
    double dy() const { return (y_max - y_min) / (ny - 1); }
    double x(int i) const { return x_min + i * dx(); }
    double y(int j) const { return y_min + j * dy(); }

    void validate() const {
        if (nx < 16 || ny < 16) throw InvalidArgument("Wigner grid needs at least 16 points per axis");
        if (!(x_max > x_min && y_max > y_min)) throw InvalidArgument("Wigner grid extents are empty");
    }
};

/// Square grid of half-width 1.1 max(amplitude bound, 4 + sqrt(dim)).
inline GridSpec default_grid(double amplitude_bound, int dim, int n = 256) {
    return GridSpec::square(1.1 * std::max(amplitude_bound, 4 + std::sqrt(double(dim))), n);
}

struct WignerGrid {
    GridSpec spec;
    Eigen::MatrixXd values;  // values(i, j) = W(x_i, y_j)
    double normalization = 0;
    bool normalization_ok = false;  // Riemann sum within 1e-2 of 1
    double max_imaginary = 0;       // largest discarded imaginary residue

    double cell() const { return spec.dx() * spec.dy(); }
};

/// W on a Cartesian grid. The result carries its Riemann-sum normalization;
/// a failed check means the grid does not cover the state.
inline WignerGrid wigner(const DensityMatrix& rho, const GridSpec& spec) {
    spec.validate();
    const int dim = rho.dim();
    const auto& m = rho.matrix();
    WignerGrid g{spec, Eigen::MatrixXd(spec.nx, spec.ny)};
    detail::LaguerreLadder ladder;
    std::vector<double> h;
    const double two_over_pi = 2 / std::numbers::pi;
    double max_imag = 0;

    for (int i = 0; i < spec.nx; ++i) {
        for (int j = 0; j < spec.ny; ++j) {
            const double x = spec.x(i), y = spec.y(j);
            const double r = std::hypot(x, y);
            const double theta = std::atan2(y, x);
            double w = 0;
            double imag = 0;
            for (int k = 0; k < dim; ++k) {
                ladder.evaluate(k, r, dim - k, h);
                Complex s = 0;
                for (int n = 0; n + k < dim; ++n) {
                    if (h[n] == 0) continue;
                    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
                    s += sign * h[n] * m(n, n + k);
                }
                if (k == 0) {
                    w += s.real();
                    imag += s.imag();
                } else {
                    w += 2 * (s * std::polar(1.0, k * theta)).real();
                }
            }
            g.values(i, j) = two_over_pi * w;
            max_imag = std::max(max_imag, two_over_pi * std::abs(imag));
        }
    }
    g.max_imaginary = max_imag;
    g.normalization = g.values.sum() * g.cell();
    g.normalization_ok = std::abs(g.normalization - 1) <= 1e-2;
    return g;
}

/// Phase-space volume where W is negative: sum |min(W, 0)| dX dY.
inline double negativity_volume(const WignerGrid& grid) {
    double s = 0;
    for (Eigen::Index i = 0; i < grid.values.size(); ++i) s += std::max(0.0, -grid.values.data()[i]);
    return s * grid.cell();
}

struct NegativityEstimate {
    double volume = 0;       // on the requested grid
    double refined = 0;      // on a grid with twice the resolution per axis
    double error = 0;        // |volume - refined|
    double normalization = 0;
};

/// Negativity volume with a grid-refinement error estimate.
inline NegativityEstimate negativity_with_error(const DensityMatrix& rho, const GridSpec& spec) {
    const auto coarse = wigner(rho, spec);
    GridSpec fine = spec;
    fine.nx = 2 * spec.nx - 1;
    fine.ny = 2 * spec.ny - 1;
    const auto dense = wigner(rho, fine);
    NegativityEstimate e;
    e.volume = negativity_volume(coarse);
    e.refined = negativity_volume(dense);
    e.error = std::abs(e.volume - e.refined);
    e.normalization = coarse.normalization;
    return e;
}

}  // namespace ddao
