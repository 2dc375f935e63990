#pragma once

// Parameter model and truncated Fock-space operators for the double-driven
// dissipative Kerr oscillator. Everything is expressed in units of the decay
// rate gamma; time is in units of 1/gamma.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace ddao {

using Complex = std::complex<double>;
using OperatorMatrix = Eigen::MatrixXcd;

inline constexpr Complex I{0.0, 1.0};

struct SystemParams {
    double chi = 0.0;        // anharmonicity
    double delta = 0.0;      // detuning omega0 - omega1
    double delta_mod = 0.0;  // modulation frequency omega2 - omega1
    double omega1 = 0.0;     // Rabi frequency of drive 1
    double omega2 = 0.0;     // Rabi frequency of drive 2
    double gamma = 1.0;      // decay rate
    double n_bath = 0.0;     // thermal quanta of the reservoir

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!(finite(chi) && finite(delta) && finite(delta_mod) && finite(omega1) && finite(omega2) &&
              finite(gamma) && finite(n_bath)))
            throw InvalidArgument("system parameters must be finite");
        if (!(gamma > 0)) throw InvalidArgument("gamma must be positive");
        if (omega1 < 0) throw InvalidArgument("omega1 must be non-negative");
        if (omega2 < 0) throw InvalidArgument("omega2 must be non-negative");
        if (n_bath < 0) throw InvalidArgument("n_bath must be non-negative");
    }

    // Stroboscopic clock 2*pi/delta_mod.
    double modulation_period() const {
        if (delta_mod == 0) throw InvalidArgument("delta_mod must be non-zero for a modulation period");
        return 2 * std::numbers::pi / std::abs(delta_mod);
    }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

// Interaction picture rotating with omega1 (the native frame) or omega2.
enum class Frame { omega1, omega2 };

inline std::string to_string(Frame f) { return f == Frame::omega1 ? "omega1" : "omega2"; }

inline void check_dim(int dim) {
    if (dim < 2) throw InvalidArgument("Fock dimension must be at least 2, got " + std::to_string(dim));
}

/// Annihilation operator a on Fock states 0..dim-1: <n-1|a|n> = sqrt(n).
inline OperatorMatrix annihilation_matrix(int dim) {
    check_dim(dim);
    OperatorMatrix a = OperatorMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(double(n));
    return a;
}

inline OperatorMatrix creation_matrix(int dim) { return annihilation_matrix(dim).adjoint(); }

inline OperatorMatrix number_matrix(int dim) {
    check_dim(dim);
    OperatorMatrix n = OperatorMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = double(k);
    return n;
}

/// Basis size heuristic ceil(4 n + 20) with n = ((omega1 + omega2)/gamma)^2,
/// the classical worst case. Advisory only; nothing enforces it.
inline int suggested_dimension(const SystemParams& p) {
    const double bound = (std::abs(p.omega1) + std::abs(p.omega2)) / p.gamma;
    return int(std::ceil(4 * bound * bound + 20));
}

/// Time-dependent Hamiltonian H(t)/hbar in banded form. The diagonal is fixed
/// per (params, frame); only the drive amplitude on the first sub-diagonal
/// depends on time.
class Hamiltonian {
public:
    Hamiltonian(const SystemParams& p, int dim, Frame frame) : params_(p), frame_(frame), dim_(dim) {
        check_dim(dim);
        const double linear = frame == Frame::omega1 ? p.delta : p.delta - p.delta_mod;
        diag_.resize(dim);
        sqrt_.resize(dim);
        for (int n = 0; n < dim; ++n) {
            diag_[n] = linear * n + p.chi * double(n) * n;
            sqrt_[n] = std::sqrt(double(n + 1));
        }
    }

    int dim() const { return dim_; }
    Frame frame() const { return frame_; }
    const SystemParams& params() const { return params_; }

    // H_nn
    const std::vector<double>& diagonal() const { return diag_; }
    // sqrt(n+1), the a^dagger matrix element <n+1|a^dagger|n>
    const std::vector<double>& ladder() const { return sqrt_; }

    // Coefficient of a^dagger: <n+1|H|n> = drive(t) sqrt(n+1).
    Complex drive(double t) const {
        const auto& p = params_;
        if (frame_ == Frame::omega1) return p.omega1 + p.omega2 * std::exp(-I * (p.delta_mod * t));
        return p.omega2 + p.omega1 * std::exp(I * (p.delta_mod * t));
    }

    OperatorMatrix dense(double t) const {
        OperatorMatrix h = OperatorMatrix::Zero(dim_, dim_);
        const Complex f = drive(t);
        for (int n = 0; n < dim_; ++n) h(n, n) = diag_[n];
        for (int n = 0; n + 1 < dim_; ++n) {
            h(n + 1, n) = f * sqrt_[n];
            h(n, n + 1) = std::conj(f) * sqrt_[n];
        }
        return h;
    }

    // out = H(t) psi, using the band structure.
    template <class In, class Out>
    void apply(double t, const In& psi, Out& out) const {
        const Complex f = drive(t);
        const Complex fc = std::conj(f);
        for (int n = 0; n < dim_; ++n) {
            Complex v = diag_[n] * psi[n];
            if (n > 0) v += f * sqrt_[n - 1] * psi[n - 1];
            if (n + 1 < dim_) v += fc * sqrt_[n] * psi[n + 1];
            out[n] = v;
        }
    }

private:
    SystemParams params_;
    Frame frame_;
    int dim_;
    std::vector<double> diag_;
    std::vector<double> sqrt_;
};

inline OperatorMatrix hamiltonian_at(double t, const SystemParams& p, int dim, Frame frame) {
    return Hamiltonian(p, dim, frame).dense(t);
}

/// Lindblad channel c * a (lowering) or c * a^dagger (raising).
struct LindbladChannel {
    double coefficient;
    bool raising;

    OperatorMatrix dense(int dim) const {
        return coefficient * (raising ? creation_matrix(dim) : annihilation_matrix(dim));
    }
};

inline std::vector<LindbladChannel> lindblad_channels(const SystemParams& p) {
    if (p.n_bath < 0) throw InvalidArgument("n_bath must be non-negative");
    if (!(p.gamma > 0)) throw InvalidArgument("gamma must be positive");
    std::vector<LindbladChannel> out{{std::sqrt((p.n_bath + 1) * p.gamma), false}};
    if (p.n_bath != 0) out.push_back({std::sqrt(p.n_bath * p.gamma), true});
    return out;
}

/// [sqrt((N+1) gamma) a] for a vacuum reservoir, plus sqrt(N gamma) a^dagger when N > 0.
inline std::vector<OperatorMatrix> lindblad_operators(const SystemParams& p, int dim) {
    check_dim(dim);
    std::vector<OperatorMatrix> out;
    for (const auto& c : lindblad_channels(p)) out.push_back(c.dense(dim));
    return out;
}

}  // namespace ddao
