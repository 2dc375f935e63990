#pragma once

// Run configuration for the command-line front end: a flat JSON object with
// optional "grid" and "scan" sub-objects. Unknown keys and ill-typed values
// are rejected with a ConfigError naming the key.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "classical.hpp"
#include "qsd.hpp"

namespace ddao {

enum class Command { poincare, lyapunov, classical_trajectory, qsd_ensemble, wigner, entropy, scan };

inline constexpr Command all_commands[] = {Command::poincare,     Command::lyapunov, Command::classical_trajectory,
                                           Command::qsd_ensemble, Command::wigner,   Command::entropy,
                                           Command::scan};

inline const char* to_string(Command c) {
    switch (c) {
    case Command::poincare: return "poincare";
    case Command::lyapunov: return "lyapunov";
    case Command::classical_trajectory: return "classical-trajectory";
    case Command::qsd_ensemble: return "qsd-ensemble";
    case Command::wigner: return "wigner";
    case Command::entropy: return "entropy";
    case Command::scan: return "scan";
    }
    return "?";
}

inline std::optional<Command> parse_command(std::string_view name) {
    for (Command c : all_commands)
        if (name == to_string(c)) return c;
    return std::nullopt;
}

struct GridConfig {
    double extent = 0;  // half-width; 0 selects default_grid
    int n = 256;
};

struct ScanConfig {
    std::string parameter = "omega2";  // or "delta_mod"
    std::vector<double> values{1.0, 10.2, 20.0};
    std::size_t period_samples = 10;
    double t_start = 8;
};

struct RunConfig {
    SystemParams params;

    // quantum trajectories
    Frame frame = Frame::omega1;
    int dim = 50;
    double dt = qsd_defaults::dt;
    Scheme scheme = Scheme::split;
    double t_end = 10;
    double tail_limit = qsd_defaults::tail_limit;
    std::size_t ensemble_size = 200;
    std::size_t full_ensemble_size = 2000;
    std::size_t groups = 10;
    std::uint64_t master_seed = 1;
    std::size_t samples_per_period = 50;   // mean_n time series
    std::size_t snapshots_per_period = 10;  // entropy time series
    double snapshot_t0 = 10;               // rounded to the stroboscopic clock

    // classical dynamics
    double alpha0_x = 0, alpha0_y = 0;
    double t0 = 0;
    std::size_t n_points = 5000;
    std::size_t transient_periods = classical_defaults::transient_periods;
    std::size_t lyapunov_periods = 1000;
    std::size_t trajectory_samples = 1001;
    double tol = classical_defaults::tol;

    GridConfig grid;
    ScanConfig scan;
    std::string output = "ddao_out";

    Complex alpha0() const { return {alpha0_x, alpha0_y}; }

    // Stroboscopic time nearest to snapshot_t0.
    double snapshot_time() const {
        const double period = params.modulation_period();
        return std::max(1.0, std::round(snapshot_t0 / period)) * period;
    }

    // First stroboscopic snapshot of a run ending at t_end: snapshot_time(),
    // or the last stroboscopic time before t_end if that comes earlier.
    double first_snapshot() const {
        const double period = params.modulation_period();
        return std::min(snapshot_time(), std::floor(t_end / period + 1e-9) * period);
    }

    TrajectoryConfig trajectory(double t_final) const {
        return {params, frame, dim, t_final, dt, scheme, tail_limit};
    }
};

namespace detail {

// Typed access to one JSON object; remembers which keys were consumed.
class KeyReader {
public:
    KeyReader(const nlohmann::json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
        if (!obj_.is_object()) throw ConfigError(prefix_.empty() ? "<document>" : prefix_, "expected an object");
    }

    std::string name(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    const nlohmann::json* find(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (auto* v = find(key)) {
            if (!v->is_number()) throw ConfigError(name(key), "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) throw ConfigError(name(key), "must be finite");
        }
    }

    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (auto* v = find(key)) {
            if (v->is_number_unsigned()) {
                const auto u = v->get<std::uint64_t>();
                if (u > std::uint64_t(std::numeric_limits<Int>::max())) throw ConfigError(name(key), "out of range");
                out = Int(u);
            } else if (v->is_number_integer()) {
                throw ConfigError(name(key), "must be non-negative");
            } else {
                throw ConfigError(name(key), "expected a non-negative integer");
            }
        }
    }

    void string(const std::string& key, std::string& out) {
        if (auto* v = find(key)) {
            if (!v->is_string()) throw ConfigError(name(key), "expected a string");
            out = v->get<std::string>();
        }
    }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(name(it.key()), "unknown key");
    }

private:
    const nlohmann::json& obj_;
    std::string prefix_;
    std::set<std::string> seen_;
};

inline void require(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

}  // namespace detail

/// Validates the fields `cmd` depends on; the error names the offending key.
inline void validate(const RunConfig& c, Command cmd) {
    using detail::require;
    const auto& p = c.params;
    require(p.gamma > 0, "gamma", "must be positive");
    require(p.omega1 >= 0, "omega1", "must be non-negative");
    require(p.omega2 >= 0, "omega2", "must be non-negative");
    require(p.n_bath >= 0, "n_bath", "must be non-negative");

    const bool classical = cmd == Command::poincare || cmd == Command::lyapunov ||
                           cmd == Command::classical_trajectory;
    if (cmd != Command::classical_trajectory)
        require(p.delta_mod != 0, "delta_mod", "must be non-zero for " + std::string(to_string(cmd)));
    if (classical || cmd == Command::scan) {
        require(c.tol > 1e-14 && c.tol <= 1e-3, "tol", "must lie in (1e-14, 1e-3]");
    }
    if (cmd == Command::poincare) require(c.n_points >= 1, "n_points", "must be positive");
    if (cmd == Command::lyapunov || cmd == Command::scan)
        require(c.lyapunov_periods > c.transient_periods, "lyapunov_periods", "must exceed transient_periods");
    if (cmd == Command::classical_trajectory) {
        require(c.t_end > c.t0, "t_end", "must exceed t0");
        require(c.trajectory_samples >= 2, "trajectory_samples", "must be at least 2");
    }
    if (classical) return;

    require(c.dim >= 2, "dim", "must be at least 2");
    require(c.dt > 0, "dt", "must be positive");
    require(c.t_end > 0, "t_end", "must be positive");
    require(c.tail_limit > 0 && c.tail_limit < 1, "tail_limit", "must lie in (0, 1)");
    require(c.ensemble_size >= 1, "ensemble_size", "must be positive");
    require(c.full_ensemble_size >= 1, "full_ensemble_size", "must be positive");
    require(c.groups >= 1, "groups", "must be positive");
    require(step_stiffness(p, c.dim, c.frame, c.dt, c.scheme) <= 0.1, "dt",
            "too large for the drive strength and basis size (dt * |H| > 0.1)");
    if (cmd == Command::qsd_ensemble) require(c.samples_per_period >= 1, "samples_per_period", "must be positive");
    if (cmd == Command::entropy)
        require(c.snapshots_per_period >= 1, "snapshots_per_period", "must be positive");
    if (cmd == Command::wigner || cmd == Command::qsd_ensemble) {
        require(c.snapshot_t0 >= 0, "snapshot_t0", "must be non-negative");
        if (cmd == Command::qsd_ensemble)
            require(c.first_snapshot() > 0, "t_end", "must cover at least one modulation period");
    }
    if (cmd == Command::wigner) {
        require(c.grid.n >= 16, "grid.n", "must be at least 16");
        require(c.grid.extent >= 0, "grid.extent", "must be non-negative");
    }
    if (cmd == Command::scan) {
        require(c.scan.parameter == "omega2" || c.scan.parameter == "delta_mod", "scan.parameter",
                "must be omega2 or delta_mod");
        require(!c.scan.values.empty(), "scan.values", "must not be empty");
        for (double v : c.scan.values) {
            require(std::isfinite(v), "scan.values", "must be finite");
            if (c.scan.parameter == "omega2") require(v >= 0, "scan.values", "omega2 must be non-negative");
            else require(v != 0, "scan.values", "delta_mod must be non-zero");
        }
        require(c.scan.period_samples >= 1, "scan.period_samples", "must be positive");
        require(c.scan.t_start >= 8, "scan.t_start", "must be at least 8 (post-transient)");
    }
}

/// Parses and validates a JSON run configuration for `cmd`.
inline RunConfig parse_config(std::string_view text, Command cmd) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    RunConfig c;
    detail::KeyReader r(doc, "");
    auto& p = c.params;
    r.number("chi", p.chi);
    r.number("delta", p.delta);
    r.number("delta_mod", p.delta_mod);
    r.number("omega1", p.omega1);
    r.number("omega2", p.omega2);
    r.number("gamma", p.gamma);
    r.number("n_bath", p.n_bath);

    std::string frame = to_string(c.frame), scheme = to_string(c.scheme);
    r.string("frame", frame);
    if (frame == "omega1") c.frame = Frame::omega1;
    else if (frame == "omega2") c.frame = Frame::omega2;
    else throw ConfigError("frame", "must be \"omega1\" or \"omega2\"");
    r.string("scheme", scheme);
    if (scheme == "split") c.scheme = Scheme::split;
    else if (scheme == "euler") c.scheme = Scheme::euler;
    else throw ConfigError("scheme", "must be \"split\" or \"euler\"");

    r.integer("dim", c.dim);
    r.number("dt", c.dt);
    r.number("t_end", c.t_end);
    r.number("tail_limit", c.tail_limit);
    r.integer("ensemble_size", c.ensemble_size);
    r.integer("full_ensemble_size", c.full_ensemble_size);
    r.integer("groups", c.groups);
    r.integer("master_seed", c.master_seed);
    r.integer("samples_per_period", c.samples_per_period);
    r.integer("snapshots_per_period", c.snapshots_per_period);
    r.number("snapshot_t0", c.snapshot_t0);

    if (auto* a = r.find("alpha0")) {
        if (!a->is_array() || a->size() != 2 || !(*a)[0].is_number() || !(*a)[1].is_number())
            throw ConfigError("alpha0", "expected [re, im]");
        c.alpha0_x = (*a)[0].get<double>();
        c.alpha0_y = (*a)[1].get<double>();
    }
    r.number("t0", c.t0);
    r.integer("n_points", c.n_points);
    r.integer("transient_periods", c.transient_periods);
    r.integer("lyapunov_periods", c.lyapunov_periods);
    r.integer("trajectory_samples", c.trajectory_samples);
    r.number("tol", c.tol);

    if (auto* g = r.find("grid")) {
        detail::KeyReader gr(*g, "grid");
        gr.number("extent", c.grid.extent);
        gr.integer("n", c.grid.n);
        gr.finish();
    }
    if (auto* s = r.find("scan")) {
        detail::KeyReader sr(*s, "scan");
        sr.string("parameter", c.scan.parameter);
        if (auto* v = sr.find("values")) {
            if (!v->is_array()) throw ConfigError("scan.values", "expected an array of numbers");
            c.scan.values.clear();
            for (const auto& x : *v) {
                if (!x.is_number()) throw ConfigError("scan.values", "expected an array of numbers");
                c.scan.values.push_back(x.get<double>());
            }
        }
        sr.integer("period_samples", c.scan.period_samples);
        sr.number("t_start", c.scan.t_start);
        sr.finish();
    }
    r.string("output", c.output);
    r.finish();
    validate(c, cmd);
    return c;
}

/// Every field, defaults included, in the input format.
inline nlohmann::json to_json(const RunConfig& c) {
    const auto& p = c.params;
    return {
        {"chi", p.chi},
        {"delta", p.delta},
        {"delta_mod", p.delta_mod},
        {"omega1", p.omega1},
        {"omega2", p.omega2},
        {"gamma", p.gamma},
        {"n_bath", p.n_bath},
        {"frame", to_string(c.frame)},
        {"scheme", to_string(c.scheme)},
        {"dim", c.dim},
        {"dt", c.dt},
        {"t_end", c.t_end},
        {"tail_limit", c.tail_limit},
        {"ensemble_size", c.ensemble_size},
        {"full_ensemble_size", c.full_ensemble_size},
        {"groups", c.groups},
        {"master_seed", c.master_seed},
        {"samples_per_period", c.samples_per_period},
        {"snapshots_per_period", c.snapshots_per_period},
        {"snapshot_t0", c.snapshot_t0},
        {"alpha0", {c.alpha0_x, c.alpha0_y}},
        {"t0", c.t0},
        {"n_points", c.n_points},
        {"transient_periods", c.transient_periods},
        {"lyapunov_periods", c.lyapunov_periods},
        {"trajectory_samples", c.trajectory_samples},
        {"tol", c.tol},
        {"grid", {{"extent", c.grid.extent}, {"n", c.grid.n}}},
        {"scan",
         {{"parameter", c.scan.parameter},
          {"values", c.scan.values},
          {"period_samples", c.scan.period_samples},
          {"t_start", c.scan.t_start}}},
        {"output", c.output},
    };
}

}  // namespace ddao
