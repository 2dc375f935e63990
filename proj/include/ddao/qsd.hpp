#pragma once

// Quantum state diffusion in the truncated Fock basis:
//
//   |dpsi> = -i H(t) |psi> dt
//            - 1/2 sum_L (L^+L - 2 <L^+> L + <L><L^+>) |psi> dt
//            + sum_L (L - <L>) |psi> dxi_L
//
// with complex Wiener increments dxi. Operators are applied in banded form;
// dense matrices from fock.hpp serve as the reference in tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "density.hpp"
#include "fock.hpp"
#include "rng.hpp"

namespace ddao {

using StateVector = Eigen::VectorXcd;

inline StateVector vacuum(int dim) {
    check_dim(dim);
    StateVector v = StateVector::Zero(dim);
    v[0] = 1.0;
    return v;
}

inline double mean_number(const StateVector& psi) {
    double s = 0;
    for (Eigen::Index n = 1; n < psi.size(); ++n) s += double(n) * std::norm(psi[n]);
    return s;
}

/// Occupation of the top three Fock levels.
inline double tail_occupation(const StateVector& psi) {
    double s = 0;
    for (Eigen::Index n = std::max<Eigen::Index>(0, psi.size() - 3); n < psi.size(); ++n) s += std::norm(psi[n]);
    return s;
}

enum class Scheme {
    // Plain Euler-Maruyama on the full equation, then renormalization.
    euler,
    // Strang splitting: the diagonal exp(-i H_diag dt/2) is applied exactly on
    // both sides; the drive and dissipative drift in between use classical
    // RK4 and the diffusion term an Euler-Maruyama increment.
    split,
};

inline std::string to_string(Scheme s) { return s == Scheme::euler ? "euler" : "split"; }

namespace qsd_defaults {
inline constexpr double dt = 1e-4;
inline constexpr double tail_limit = 1e-6;
inline constexpr double norm_tol = 1e-9;
}  // namespace qsd_defaults

/// Hamiltonian, Lindblad channels and scratch space for stepping one
/// trajectory. Not shareable between threads (scratch buffers).
///
/// Every operator involved is tridiagonal in the Fock basis, so the drift at
/// a given state collapses to
///
///   out_n = A sqrt(n) psi_{n-1} + B sqrt(n+1) psi_{n+1} + D_n psi_n
///
/// with scalars A, B fixed by the drive amplitude and the channel means <L>.
class QsdModel {
public:
    QsdModel(const SystemParams& p, int dim, Frame frame, Scheme scheme = Scheme::split)
        : h_(p, dim, frame), channels_(lindblad_channels(p)), scheme_(scheme), dim_(dim) {
        p.validate();
        for (auto* v : {&k1_, &k2_, &k3_, &k4_, &tmp_, &diff_}) v->resize(dim);
        lower_sq_ = raise_sq_ = 0;
        for (const auto& c : channels_) (c.raising ? raise_sq_ : lower_sq_) += c.coefficient * c.coefficient;
    }

    int dim() const { return dim_; }
    std::size_t channel_count() const { return channels_.size(); }
    const Hamiltonian& hamiltonian() const { return h_; }
    Scheme scheme() const { return scheme_; }

    /// Advances psi from t to t + dt in place and renormalizes it.
    void step(StateVector& psi, double t, double dt, std::span<const Complex> noise) {
        if (noise.size() != channels_.size()) throw InvalidArgument("noise length differs from channel count");
        if (psi.size() != dim_) throw InvalidArgument("state dimension mismatch");
        if (scheme_ == Scheme::euler) {
            drift(t, psi, k1_, true);
            diffusion(psi, noise, diff_);
            psi += dt * k1_ + diff_;
        } else {
            prepare_phases(dt);
            psi = psi.cwiseProduct(half_phase_);
            diffusion(psi, noise, diff_);
            // RK4 on the drive + dissipative drift
            drift(t, psi, k1_, false);
            tmp_ = psi + 0.5 * dt * k1_;
            drift(t + 0.5 * dt, tmp_, k2_, false);
            tmp_ = psi + 0.5 * dt * k2_;
            drift(t + 0.5 * dt, tmp_, k3_, false);
            tmp_ = psi + dt * k3_;
            drift(t + dt, tmp_, k4_, false);
            psi += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_) + diff_;
            psi = psi.cwiseProduct(half_phase_);
        }
        const double nrm = psi.norm();
        if (!std::isfinite(nrm) || nrm == 0)
            throw NumericsError("non-finite state vector at t=" + std::to_string(t), t);
        psi /= nrm;
    }

private:
    // P = sum_n conj(psi_n) sqrt(n+1) psi_{n+1} = <a>, unnormalized; also |psi|^2.
    std::pair<Complex, double> lowering_moment(const StateVector& psi) const {
        const auto& s = h_.ladder();
        double pr = 0, pi = 0, n2 = 0;
        const Complex* y = psi.data();
        for (int n = 0; n + 1 < dim_; ++n) {
            const double ar = y[n].real(), ai = y[n].imag();
            const double br = y[n + 1].real(), bi = y[n + 1].imag();
            pr += s[n] * (ar * br + ai * bi);
            pi += s[n] * (ar * bi - ai * br);
            n2 += ar * ar + ai * ai;
        }
        n2 += std::norm(y[dim_ - 1]);
        return {{pr, pi}, n2};
    }

    // <L> for a channel, given <a> (normalized).
    static Complex channel_mean(const LindbladChannel& c, Complex mean_a) {
        return c.coefficient * (c.raising ? std::conj(mean_a) : mean_a);
    }

    // out_n = A s_{n-1} y_{n-1} + B s_n y_{n+1} + (dr_n + i di_n) y_n
    template <class Diag>
    void banded(const StateVector& psi, Complex a, Complex b, Diag&& diag, StateVector& out) const {
        const auto& s = h_.ladder();
        const Complex* y = psi.data();
        Complex* o = out.data();
        const double ar = a.real(), ai = a.imag(), br = b.real(), bi = b.imag();
        for (int n = 0; n < dim_; ++n) {
            const auto [dr, di] = diag(n);
            double re = dr * y[n].real() - di * y[n].imag();
            double im = dr * y[n].imag() + di * y[n].real();
            if (n > 0) {
                const double yr = s[n - 1] * y[n - 1].real(), yi = s[n - 1] * y[n - 1].imag();
                re += ar * yr - ai * yi;
                im += ar * yi + ai * yr;
            }
            if (n + 1 < dim_) {
                const double yr = s[n] * y[n + 1].real(), yi = s[n] * y[n + 1].imag();
                re += br * yr - bi * yi;
                im += br * yi + bi * yr;
            }
            o[n] = {re, im};
        }
    }

    // Deterministic part of the equation. `with_diagonal` selects whether the
    // diagonal of H is included (euler) or handled by the exact phases (split).
    void drift(double t, const StateVector& psi, StateVector& out, bool with_diagonal) const {
        const Complex f = h_.drive(t);
        const auto [moment, norm2] = lowering_moment(psi);
        const Complex mean_a = moment / norm2;
        // -i H_offdiag psi contributes A = -i f, B = -i conj(f); each channel
        // adds conj(<L>) L psi and -1/2 (L^+ L + |<L>|^2) psi.
        Complex a = -I * f, b = -I * std::conj(f);
        double mean_sq = 0;
        for (const auto& c : channels_) {
            const Complex ell = channel_mean(c, mean_a);
            (c.raising ? a : b) += c.coefficient * std::conj(ell);
            mean_sq += std::norm(ell);
        }
        const auto& d = h_.diagonal();
        const double lo = lower_sq_, hi = raise_sq_;
        const int top = dim_ - 1;
        banded(psi, a, b,
               [&](int n) {
                   // L^+L: c^2 n for a, c^2 (n+1) for a^+ (zero on the truncated top level)
                   const double damp = -0.5 * (lo * n + (n < top ? hi * (n + 1) : 0.0) + mean_sq);
                   return std::pair<double, double>{damp, with_diagonal ? -d[n] : 0.0};
               },
               out);
    }

    void diffusion(const StateVector& psi, std::span<const Complex> noise, StateVector& out) const {
        const auto [moment, norm2] = lowering_moment(psi);
        const Complex mean_a = moment / norm2;
        Complex a = 0, b = 0, centre = 0;
        for (std::size_t k = 0; k < channels_.size(); ++k) {
            const auto& c = channels_[k];
            (c.raising ? a : b) += noise[k] * c.coefficient;
            centre -= noise[k] * channel_mean(c, mean_a);
        }
        banded(psi, a, b, [&](int) { return std::pair<double, double>{centre.real(), centre.imag()}; }, out);
    }

    void prepare_phases(double dt) {
        if (phase_dt_ == dt) return;
        half_phase_.resize(dim_);
        for (int n = 0; n < dim_; ++n) half_phase_[n] = std::exp(-I * (0.5 * dt * h_.diagonal()[n]));
        phase_dt_ = dt;
    }

    Hamiltonian h_;
    std::vector<LindbladChannel> channels_;
    Scheme scheme_;
    int dim_;
    double lower_sq_, raise_sq_;
    StateVector k1_, k2_, k3_, k4_, tmp_, diff_;
    StateVector half_phase_;
    double phase_dt_ = -1;
};

/// dt times a bound on the spectral norm of the part of H stepped explicitly:
/// all of H for euler, only the drive band for split (the diagonal is exact).
/// Values above 0.1 indicate a step size that is too coarse.
inline double step_stiffness(const SystemParams& p, int dim, Frame frame, double dt, Scheme scheme) {
    const double band = 2 * (std::abs(p.omega1) + std::abs(p.omega2)) * std::sqrt(double(dim - 1));
    if (scheme == Scheme::split) return dt * band;
    double diag = 0;
    for (double d : Hamiltonian(p, dim, frame).diagonal()) diag = std::max(diag, std::abs(d));
    return dt * (diag + band);
}

/// One QSD step from t to t + dt; returns the renormalized state.
inline StateVector qsd_step(const StateVector& state, double t, double dt, const SystemParams& params, Frame frame,
                            std::span<const Complex> noise, Scheme scheme = Scheme::euler) {
    QsdModel model(params, int(state.size()), frame, scheme);
    StateVector psi = state;
    model.step(psi, t, dt, noise);
    return psi;
}

/// Times (nearest step) at which a trajectory reports mean_n, and at which it
/// hands the full state to a snapshot consumer.
struct SampleSpec {
    std::vector<double> observe_times;
    std::vector<double> snapshot_times;
    bool keep_snapshots = false;  // store snapshots in the TrajectoryRecord
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<double> sample_times;
    std::vector<double> mean_n;
    std::vector<StateVector> snapshots;

    friend bool operator==(const TrajectoryRecord& a, const TrajectoryRecord& b) {
        if (a.seed != b.seed || a.sample_times != b.sample_times || a.mean_n != b.mean_n ||
            a.snapshots.size() != b.snapshots.size())
            return false;
        for (std::size_t i = 0; i < a.snapshots.size(); ++i)
            if (a.snapshots[i] != b.snapshots[i]) return false;
        return true;
    }
};

struct TrajectoryConfig {
    SystemParams params;
    Frame frame = Frame::omega1;
    int dim = 50;
    double t_end = 10;
    double dt = qsd_defaults::dt;
    Scheme scheme = Scheme::split;
    double tail_limit = qsd_defaults::tail_limit;
};

using SnapshotSink = std::function<void(std::size_t index, const StateVector&)>;

namespace detail {

inline std::vector<std::int64_t> to_steps(const std::vector<double>& times, double dt, std::int64_t n_steps,
                                          const char* what) {
    std::vector<std::int64_t> out;
    out.reserve(times.size());
    for (double t : times) {
        const auto k = std::int64_t(std::llround(t / dt));
        if (t < 0 || k > n_steps) throw InvalidArgument(std::string(what) + " time outside [0, t_end]");
        if (!out.empty() && k < out.back()) throw InvalidArgument(std::string(what) + " times must be sorted");
        out.push_back(k);
    }
    return out;
}

}  // namespace detail

/// Evolves the vacuum from t = 0 to t_end. Fully determined by the seed and
/// the configuration. Throws TruncationError if the top three levels ever
/// hold more than tail_limit of the norm.
inline TrajectoryRecord run_trajectory(std::uint64_t seed, const TrajectoryConfig& cfg, const SampleSpec& spec,
                                       const SnapshotSink& sink = {}) {
    cfg.params.validate();
    check_dim(cfg.dim);
    if (!(cfg.dt > 0)) throw InvalidArgument("dt must be positive");
    if (!(cfg.t_end >= 0)) throw InvalidArgument("t_end must be non-negative");
    const auto n_steps = std::int64_t(std::llround(cfg.t_end / cfg.dt));
    const auto obs = detail::to_steps(spec.observe_times, cfg.dt, n_steps, "observation");
    const auto snaps = detail::to_steps(spec.snapshot_times, cfg.dt, n_steps, "snapshot");

    QsdModel model(cfg.params, cfg.dim, cfg.frame, cfg.scheme);
    WienerSource noise_src(seed);
    std::vector<Complex> noise(model.channel_count());
    StateVector psi = vacuum(cfg.dim);

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.sample_times = spec.observe_times;
    rec.mean_n.reserve(obs.size());
    std::size_t next_obs = 0, next_snap = 0;
    auto emit = [&](std::int64_t k) {
        while (next_obs < obs.size() && obs[next_obs] == k) {
            rec.mean_n.push_back(mean_number(psi));
            ++next_obs;
        }
        while (next_snap < snaps.size() && snaps[next_snap] == k) {
            if (sink) sink(next_snap, psi);
            if (spec.keep_snapshots) rec.snapshots.push_back(psi);
            ++next_snap;
        }
    };

    emit(0);
    for (std::int64_t k = 0; k < n_steps; ++k) {
        const double t = double(k) * cfg.dt;
        noise_src.fill(cfg.dt, noise);
        model.step(psi, t, cfg.dt, noise);
        const double tail = tail_occupation(psi);
        if (tail > cfg.tail_limit)
            throw TruncationError("truncation alarm: top-level occupation " + std::to_string(tail) + " at t=" +
                                      std::to_string(t + cfg.dt) + " (dim=" + std::to_string(cfg.dim) + ")",
                                  t + cfg.dt, tail);
        emit(k + 1);
    }
    return rec;
}

/// Running sum of projectors |psi><psi|. Merging is entrywise addition.
class EnsembleAccumulator {
public:
    EnsembleAccumulator() = default;
    explicit EnsembleAccumulator(int dim) : dim_(dim), sum_(OperatorMatrix::Zero(dim, dim)) {}

    int dim() const { return dim_; }
    std::size_t count() const { return count_; }
    const OperatorMatrix& sum() const { return sum_; }

    void accumulate(const StateVector& psi) {
        if (psi.size() != dim_) throw InvalidArgument("state dimension differs from accumulator");
        sum_.noalias() += psi * psi.adjoint();
        ++count_;
    }

    void merge(const EnsembleAccumulator& other) {
        if (other.dim_ != dim_) throw InvalidArgument("accumulator dimension mismatch");
        sum_ += other.sum_;
        count_ += other.count_;
    }

    // Restore from serialized data (checkpoints).
    static EnsembleAccumulator from_parts(OperatorMatrix sum, std::size_t count) {
        EnsembleAccumulator a(int(sum.rows()));
        a.sum_ = std::move(sum);
        a.count_ = count;
        return a;
    }

private:
    int dim_ = 0;
    OperatorMatrix sum_;
    std::size_t count_ = 0;
};

inline EnsembleAccumulator accumulate(EnsembleAccumulator acc, const StateVector& psi) {
    acc.accumulate(psi);
    return acc;
}

inline EnsembleAccumulator merge(EnsembleAccumulator a, const EnsembleAccumulator& b) {
    a.merge(b);
    return a;
}

/// sum / count, Hermitized.
inline DensityMatrix density_from(const EnsembleAccumulator& acc) {
    if (acc.count() == 0) throw InvalidArgument("empty ensemble accumulator");
    OperatorMatrix m = acc.sum() / double(acc.count());
    m = 0.5 * (m + m.adjoint()).eval();
    return DensityMatrix(std::move(m));
}

}  // namespace ddao
