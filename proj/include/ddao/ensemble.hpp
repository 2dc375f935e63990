#pragma once

// Ensembles of QSD trajectories.
//
// Trajectory i uses seed trajectory_seed(master_seed, i). Trajectories are
// partitioned into `groups` contiguous index blocks; each block is summed in
// index order by a single worker and blocks are merged in block order, so the
// result is bitwise independent of the worker count and of scheduling. The
// blocks double as jackknife samples for the entropy error and as the unit
// of checkpointing.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "entropy.hpp"
#include "qsd.hpp"

namespace ddao {

struct EnsembleConfig {
    TrajectoryConfig trajectory;
    std::size_t ensemble_size = 200;
    std::uint64_t master_seed = 1;
    std::size_t groups = 10;
    unsigned workers = 1;
    std::vector<double> observe_times;   // mean_n samples
    std::vector<double> snapshot_times;  // density matrices
};

/// Result of one contiguous block of trajectories.
struct GroupResult {
    std::size_t index = 0;
    std::size_t first = 0;  // first trajectory index
    std::vector<EnsembleAccumulator> snapshots;
    std::vector<std::vector<double>> mean_n;  // [trajectory in block][sample]
};

struct Estimate {
    double value = 0;
    double se = 0;
};

inline std::pair<std::size_t, std::size_t> group_range(std::size_t g, std::size_t groups, std::size_t size) {
    return {g * size / groups, (g + 1) * size / groups};
}

inline GroupResult run_group(const EnsembleConfig& cfg, std::size_t g) {
    const auto [first, last] = group_range(g, cfg.groups, cfg.ensemble_size);
    GroupResult out;
    out.index = g;
    out.first = first;
    out.snapshots.assign(cfg.snapshot_times.size(), EnsembleAccumulator(cfg.trajectory.dim));
    const SampleSpec spec{cfg.observe_times, cfg.snapshot_times, false};
    for (std::size_t i = first; i < last; ++i) {
        auto rec = run_trajectory(trajectory_seed(cfg.master_seed, i), cfg.trajectory, spec,
                                  [&](std::size_t s, const StateVector& psi) { out.snapshots[s].accumulate(psi); });
        out.mean_n.push_back(std::move(rec.mean_n));
    }
    return out;
}

class EnsembleResult {
public:
    EnsembleResult(EnsembleConfig cfg, std::vector<GroupResult> groups) : cfg_(std::move(cfg)), groups_(std::move(groups)) {
        std::sort(groups_.begin(), groups_.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
        totals_.assign(cfg_.snapshot_times.size(), EnsembleAccumulator(cfg_.trajectory.dim));
        for (const auto& g : groups_) {
            for (std::size_t s = 0; s < totals_.size(); ++s) totals_[s].merge(g.snapshots[s]);
            for (const auto& series : g.mean_n) mean_n_.push_back(series);
        }
    }

    const EnsembleConfig& config() const { return cfg_; }
    const std::vector<GroupResult>& groups() const { return groups_; }
    std::size_t size() const { return mean_n_.size(); }

    // Per-trajectory mean_n series, in trajectory order.
    const std::vector<std::vector<double>>& trajectories() const { return mean_n_; }

    /// Ensemble mean of n at observation i with its standard error.
    Estimate mean_n(std::size_t i) const {
        const std::size_t m = mean_n_.size();
        double s = 0, s2 = 0;
        for (const auto& series : mean_n_) s += series[i];
        const double mean = s / double(m);
        for (const auto& series : mean_n_) s2 += (series[i] - mean) * (series[i] - mean);
        const double var = m > 1 ? s2 / double(m - 1) : 0.0;
        return {mean, std::sqrt(var / double(m))};
    }

    /// Mean and standard error of n(i) - n(j), paired per trajectory.
    Estimate mean_n_difference(std::size_t i, std::size_t j) const {
        const std::size_t m = mean_n_.size();
        double s = 0, s2 = 0;
        for (const auto& series : mean_n_) s += series[i] - series[j];
        const double mean = s / double(m);
        for (const auto& series : mean_n_) {
            const double d = series[i] - series[j] - mean;
            s2 += d * d;
        }
        return {mean, std::sqrt(s2 / double(m - 1) / double(m))};
    }

    const EnsembleAccumulator& accumulator(std::size_t snapshot) const { return totals_.at(snapshot); }
    DensityMatrix density(std::size_t snapshot) const { return density_from(totals_.at(snapshot)); }

    /// Entropy of the ensemble density matrix with a delete-one-group
    /// jackknife standard error.
    Estimate entropy(std::size_t snapshot) const {
        const double full = von_neumann_entropy(density(snapshot));
        const std::size_t g = groups_.size();
        if (g < 2) return {full, 0};
        std::vector<double> loo(g);
        for (std::size_t k = 0; k < g; ++k) {
            EnsembleAccumulator acc(cfg_.trajectory.dim);
            for (std::size_t j = 0; j < g; ++j)
                if (j != k) acc.merge(groups_[j].snapshots[snapshot]);
            loo[k] = von_neumann_entropy(density_from(acc));
        }
        double mean = 0;
        for (double v : loo) mean += v;
        mean /= double(g);
        double ss = 0;
        for (double v : loo) ss += (v - mean) * (v - mean);
        return {full, std::sqrt(double(g - 1) / double(g) * ss)};
    }

private:
    EnsembleConfig cfg_;
    std::vector<GroupResult> groups_;
    std::vector<EnsembleAccumulator> totals_;
    std::vector<std::vector<double>> mean_n_;
};

inline void validate(const EnsembleConfig& cfg) {
    if (cfg.ensemble_size == 0) throw InvalidArgument("ensemble_size must be positive");
    if (cfg.groups == 0 || cfg.groups > cfg.ensemble_size)
        throw InvalidArgument("groups must lie in [1, ensemble_size]");
    if (cfg.workers == 0) throw InvalidArgument("workers must be positive");
}

/// Runs every group not already present in `done` (e.g. restored from a
/// checkpoint). on_group is invoked, serialized, as each group finishes.
inline EnsembleResult run_ensemble(const EnsembleConfig& cfg, std::vector<GroupResult> done = {},
                                   const std::function<void(const GroupResult&)>& on_group = {}) {
    validate(cfg);
    std::vector<bool> have(cfg.groups, false);
    for (const auto& g : done) {
        if (g.index >= cfg.groups) throw InvalidArgument("restored group index out of range");
        have[g.index] = true;
    }
    std::vector<std::size_t> todo;
    for (std::size_t g = 0; g < cfg.groups; ++g)
        if (!have[g]) todo.push_back(g);

    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    auto work = [&] {
        while (!failed) {
            const std::size_t k = next++;
            if (k >= todo.size()) return;
            try {
                auto r = run_group(cfg, todo[k]);
                std::lock_guard lock(mu);
                if (on_group) on_group(r);
                done.push_back(std::move(r));
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
            }
        }
    };
    const unsigned n_threads = unsigned(std::min<std::size_t>(cfg.workers, std::max<std::size_t>(todo.size(), 1)));
    if (n_threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return EnsembleResult(cfg, std::move(done));
}

/// Stroboscopic times t0 + n T for n in [n_first, n_last].
inline std::vector<double> stroboscopic_times(double t0, double period, std::size_t n_first, std::size_t n_last) {
    std::vector<double> out;
    for (std::size_t n = n_first; n <= n_last; ++n) out.push_back(t0 + period * double(n));
    return out;
}

/// `per_period` equally spaced samples per modulation period over [t_begin, t_end].
inline std::vector<double> uniform_times(double t_begin, double t_end, double period, std::size_t per_period) {
    std::vector<double> out;
    const double step = period / double(per_period);
    const auto n = std::size_t(std::floor((t_end - t_begin) / step + 1e-9));
    for (std::size_t k = 0; k <= n; ++k) out.push_back(t_begin + step * double(k));
    return out;
}

struct MinEntropy {
    double value = 0;  // minimum over the sampled phases
    double se = 0;     // jackknife error at the minimizing phase
    double time = 0;   // where the minimum occurred
    std::vector<double> times;
    std::vector<Estimate> entropies;
};

struct MinEntropyOptions {
    double t_start = 8;  // first stroboscopic time at or after this is used
    std::uint64_t master_seed = 1;
    double dt = qsd_defaults::dt;
    unsigned workers = 1;
    std::size_t groups = 10;
    Scheme scheme = Scheme::split;
    double tail_limit = qsd_defaults::tail_limit;
};

/// Minimum of S(t) over `period_sample_count` equally spaced phases of one
/// modulation period starting at a post-transient stroboscopic time.
inline MinEntropy min_entropy_over_period(const SystemParams& params, Frame frame, int dim, std::size_t ensemble_size,
                                          std::size_t period_sample_count, const MinEntropyOptions& opt = {}) {
    if (period_sample_count == 0) throw InvalidArgument("period_sample_count must be positive");
    if (opt.t_start < 8) throw InvalidArgument("minimum entropy needs a post-transient start (t >= 8/gamma)");
    const double period = params.modulation_period();
    const double t0 = std::ceil(opt.t_start / period - 1e-9) * period;
    MinEntropy out;
    for (std::size_t k = 0; k < period_sample_count; ++k)
        out.times.push_back(t0 + period * double(k) / double(period_sample_count));

    EnsembleConfig cfg;
    cfg.trajectory = {params, frame, dim, out.times.back(), opt.dt, opt.scheme, opt.tail_limit};
    cfg.ensemble_size = ensemble_size;
    cfg.master_seed = opt.master_seed;
    cfg.groups = std::min(opt.groups, ensemble_size);
    cfg.workers = opt.workers;
    cfg.snapshot_times = out.times;
    const auto result = run_ensemble(cfg);

    out.value = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < out.times.size(); ++k) {
        out.entropies.push_back(result.entropy(k));
        if (out.entropies.back().value < out.value) {
            out.value = out.entropies.back().value;
            out.se = out.entropies.back().se;
            out.time = out.times[k];
        }
    }
    return out;
}

}  // namespace ddao
