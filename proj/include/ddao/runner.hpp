#pragma once

// Command implementations behind the `ddao` tool. Each command writes CSV
// data files under the configured output prefix plus a JSON manifest holding
// the resolved configuration, seed, version and wall time.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "classical.hpp"
#include "config.hpp"
#include "ensemble.hpp"
#include "entropy.hpp"
#include "wigner.hpp"

namespace ddao {

inline constexpr const char* version = "0.1.0";

struct RunOptions {
    std::optional<std::uint64_t> seed;  // overrides master_seed
    std::optional<std::string> out;     // overrides output
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    bool full_scale = false;
    bool resume = false;                    // qsd-ensemble: continue from the checkpoint
    std::optional<std::size_t> stop_after;  // qsd-ensemble: stop after this many new groups
    std::ostream* log = &std::cerr;
};

struct OutputFile {
    std::string role;
    std::string path;
    std::vector<std::string> columns;
};

struct RunReport {
    std::vector<OutputFile> files;
    bool complete = true;  // false when stopped early with a checkpoint
    nlohmann::json summary = nlohmann::json::object();
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::ofstream open_output(const std::string& path) {
    const std::filesystem::path fs_path(path);
    std::error_code ec;
    if (fs_path.has_parent_path()) std::filesystem::create_directories(fs_path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

inline void close_output(std::ofstream& out, const std::string& path) {
    out.close();
    if (!out) throw IoError("failed writing " + path);
}

// Header row plus one row per record, numbers at 17 significant digits.
inline OutputFile write_csv(const std::string& path, const std::string& role, std::vector<std::string> columns,
                            const std::vector<std::vector<double>>& rows) {
    auto out = open_output(path);
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt17(row[i]);
        out << '\n';
    }
    close_output(out, path);
    return {role, path, std::move(columns)};
}

inline void write_json(const std::string& path, const nlohmann::json& doc) {
    const std::string tmp = path + ".tmp";
    {
        auto out = open_output(tmp);
        out << doc.dump(2) << '\n';
        close_output(out, tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

inline std::size_t ensemble_size(const RunConfig& c, const RunOptions& o) {
    return o.full_scale ? c.full_ensemble_size : c.ensemble_size;
}

inline EnsembleConfig ensemble_config(const RunConfig& c, const RunOptions& o, double t_final) {
    EnsembleConfig e;
    e.trajectory = c.trajectory(t_final);
    e.ensemble_size = ensemble_size(c, o);
    e.master_seed = c.master_seed;
    e.groups = std::min(c.groups, e.ensemble_size);
    e.workers = o.workers;
    return e;
}

inline std::function<void(const GroupResult&)> progress(const RunOptions& o, std::size_t groups) {
    return [log = o.log, groups, done = std::size_t(0)](const GroupResult& g) mutable {
        if (log) *log << "group " << g.index << " finished (" << ++done << " this run, " << groups << " total)\n";
    };
}

// Checkpoint: completed groups of a qsd-ensemble run, keyed by the resolved
// configuration so a resume cannot mix runs.
inline nlohmann::json group_to_json(const GroupResult& g) {
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& acc : g.snapshots) {
        std::vector<double> re, im;
        const auto& m = acc.sum();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                re.push_back(m(i, j).real());
                im.push_back(m(i, j).imag());
            }
        snaps.push_back({{"count", acc.count()}, {"dim", acc.dim()}, {"re", re}, {"im", im}});
    }
    return {{"index", g.index}, {"first", g.first}, {"mean_n", g.mean_n}, {"snapshots", snaps}};
}

inline GroupResult group_from_json(const nlohmann::json& j) {
    GroupResult g;
    g.index = j.at("index").get<std::size_t>();
    g.first = j.at("first").get<std::size_t>();
    g.mean_n = j.at("mean_n").get<std::vector<std::vector<double>>>();
    for (const auto& s : j.at("snapshots")) {
        const int dim = s.at("dim").get<int>();
        const auto re = s.at("re").get<std::vector<double>>();
        const auto im = s.at("im").get<std::vector<double>>();
        if (re.size() != std::size_t(dim) * dim || im.size() != re.size())
            throw IoError("checkpoint snapshot has the wrong size");
        OperatorMatrix m(dim, dim);
        for (int c = 0, k = 0; c < dim; ++c)
            for (int r = 0; r < dim; ++r, ++k) m(r, c) = {re[k], im[k]};
        g.snapshots.push_back(EnsembleAccumulator::from_parts(std::move(m), s.at("count").get<std::size_t>()));
    }
    return g;
}

}  // namespace detail

inline RunReport run_poincare(const RunConfig& c) {
    const auto set = poincare_section(c.params, c.alpha0(), c.t0, c.n_points, c.transient_periods, c.tol);
    std::vector<std::vector<double>> rows;
    double r_max = 0;
    for (const auto& p : set.points) {
        rows.push_back({p.x, p.y});
        r_max = std::max(r_max, p.radius());
    }
    RunReport rep;
    rep.files.push_back(detail::write_csv(c.output + "_poincare.csv", "poincare", {"x", "y"}, rows));
    rep.summary = {{"points", set.points.size()}, {"max_radius", r_max}, {"amplitude_bound", amplitude_bound(c.params)}};
    return rep;
}

inline RunReport run_lyapunov(const RunConfig& c) {
    const auto est = lyapunov_periodic(c.params, {c.alpha0(), c.lyapunov_periods, c.transient_periods, c.tol});
    RunReport rep;
    rep.files.push_back(detail::write_csv(c.output + "_lyapunov.csv", "lyapunov",
                                          {"lambda_max", "n_renorm", "converged"},
                                          {{est.lambda_max, double(est.n_renorm), est.converged ? 1.0 : 0.0}}));
    rep.summary = {{"lambda_max", est.lambda_max},
                   {"converged", est.converged},
                   {"regime", to_string(classify(est.lambda_max, c.params.gamma))}};
    return rep;
}

inline RunReport run_classical_trajectory(const RunConfig& c) {
    const auto samples = integrate_classical(c.alpha0(), c.t0, c.t_end, c.params, c.tol, c.trajectory_samples);
    std::vector<std::vector<double>> rows;
    for (const auto& s : samples) rows.push_back({s.t, s.point.x, s.point.y, std::norm(s.point.alpha())});
    RunReport rep;
    rep.files.push_back(
        detail::write_csv(c.output + "_trajectory.csv", "trajectory", {"t", "x", "y", "n"}, rows));
    return rep;
}

inline RunReport run_qsd_ensemble(const RunConfig& c, const RunOptions& o) {
    const double period = c.params.modulation_period();
    auto e = detail::ensemble_config(c, o, c.t_end);
    e.observe_times = uniform_times(0, c.t_end, period, c.samples_per_period);
    for (double t = c.first_snapshot(); t <= c.t_end + 1e-12; t += period) e.snapshot_times.push_back(t);

    const std::string ckpt_path = c.output + "_checkpoint.json";
    nlohmann::json fingerprint = to_json(c);
    fingerprint["ensemble_size"] = e.ensemble_size;
    std::vector<GroupResult> done;
    if (o.resume && std::filesystem::exists(ckpt_path)) {
        std::ifstream in(ckpt_path);
        nlohmann::json ck;
        try {
            in >> ck;
        } catch (const nlohmann::json::exception& ex) {
            throw IoError("unreadable checkpoint " + ckpt_path + ": " + ex.what());
        }
        if (ck.value("config", nlohmann::json()) != fingerprint)
            throw ConfigError("resume", "checkpoint " + ckpt_path + " belongs to a different configuration");
        for (const auto& g : ck.at("groups")) done.push_back(detail::group_from_json(g));
    }

    // Checkpoint after every finished group; stop_after simulates an interruption.
    nlohmann::json ck_groups = nlohmann::json::array();
    for (const auto& g : done) ck_groups.push_back(detail::group_to_json(g));
    std::size_t fresh = 0;
    struct Stop {};
    auto report = detail::progress(o, e.groups);
    std::optional<EnsembleResult> result;
    try {
        result = run_ensemble(e, done, [&](const GroupResult& g) {
            ck_groups.push_back(detail::group_to_json(g));
            detail::write_json(ckpt_path, {{"config", fingerprint}, {"groups", ck_groups}});
            report(g);
            if (o.stop_after && ++fresh >= *o.stop_after) throw Stop{};
        });
    } catch (const Stop&) {
        RunReport rep;
        rep.complete = false;
        rep.files.push_back({"checkpoint", ckpt_path, {}});
        rep.summary = {{"groups_done", ck_groups.size()}, {"groups_total", e.groups}};
        return rep;
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < e.observe_times.size(); ++i) {
        const auto m = result->mean_n(i);
        rows.push_back({e.observe_times[i], m.value, m.se});
    }
    RunReport rep;
    rep.files.push_back(detail::write_csv(c.output + "_mean_n.csv", "mean_n", {"t", "mean_n", "se"}, rows));
    rows.clear();
    for (std::size_t s = 0; s < e.snapshot_times.size(); ++s) {
        const auto S = result->entropy(s);
        rows.push_back({e.snapshot_times[s], S.value, S.se, mean_excitation(result->density(s))});
    }
    rep.files.push_back(detail::write_csv(c.output + "_snapshots.csv", "snapshots",
                                          {"t", "entropy", "entropy_se", "mean_excitation"}, rows));
    if (!e.snapshot_times.empty()) {
        rows.clear();
        const auto rho = result->density(e.snapshot_times.size() - 1);
        for (int n = 0; n < rho.dim(); ++n)
            for (int m = 0; m < rho.dim(); ++m) rows.push_back({double(n), double(m), rho(n, m).real(), rho(n, m).imag()});
        rep.files.push_back(detail::write_csv(c.output + "_rho.csv", "density_matrix", {"n", "m", "re", "im"}, rows));
    }
    std::filesystem::remove(ckpt_path);
    double peak = 0;
    for (std::size_t i = 0; i < e.observe_times.size(); ++i) peak = std::max(peak, result->mean_n(i).value);
    rep.summary = {{"trajectories", result->size()}, {"max_mean_n", peak}};
    return rep;
}

inline RunReport run_wigner(const RunConfig& c, const RunOptions& o) {
    const double t_snap = c.snapshot_time();
    auto e = detail::ensemble_config(c, o, t_snap);
    e.snapshot_times = {t_snap};
    const auto result = run_ensemble(e, {}, detail::progress(o, e.groups));
    const auto rho = result.density(0);
    const GridSpec spec = c.grid.extent > 0 ? GridSpec::square(c.grid.extent, c.grid.n)
                                            : default_grid(amplitude_bound(c.params), c.dim, c.grid.n);
    const auto grid = wigner(rho, spec);
    const auto neg = negativity_with_error(rho, spec);

    // Row j holds W(x_i, y_j) for i = 0..nx-1.
    const std::string path = c.output + "_wigner.csv";
    auto out = detail::open_output(path);
    for (int j = 0; j < spec.ny; ++j) {
        for (int i = 0; i < spec.nx; ++i) out << (i ? "," : "") << detail::fmt17(grid.values(i, j));
        out << '\n';
    }
    detail::close_output(out, path);

    const std::string meta_path = c.output + "_wigner.json";
    detail::write_json(meta_path, {{"x_min", spec.x_min},
                                   {"x_max", spec.x_max},
                                   {"y_min", spec.y_min},
                                   {"y_max", spec.y_max},
                                   {"nx", spec.nx},
                                   {"ny", spec.ny},
                                   {"layout", "row j is y_j, column i is x_i"},
                                   {"time", t_snap},
                                   {"trajectories", result.size()},
                                   {"normalization", grid.normalization},
                                   {"normalization_ok", grid.normalization_ok},
                                   {"negativity_volume", neg.volume},
                                   {"negativity_error", neg.error},
                                   {"entropy", von_neumann_entropy(rho)},
                                   {"mean_excitation", mean_excitation(rho)}});
    RunReport rep;
    rep.files.push_back({"wigner", path, {}});
    rep.files.push_back({"wigner_metadata", meta_path, {}});
    rep.summary = {{"normalization", grid.normalization}, {"negativity_volume", neg.volume}};
    return rep;
}

inline RunReport run_entropy(const RunConfig& c, const RunOptions& o) {
    auto e = detail::ensemble_config(c, o, c.t_end);
    e.snapshot_times = uniform_times(0, c.t_end, c.params.modulation_period(), c.snapshots_per_period);
    e.observe_times = e.snapshot_times;
    const auto result = run_ensemble(e, {}, detail::progress(o, e.groups));
    std::vector<std::vector<double>> rows;
    for (std::size_t s = 0; s < e.snapshot_times.size(); ++s) {
        const auto S = result.entropy(s);
        const auto n = result.mean_n(s);
        rows.push_back({e.snapshot_times[s], S.value, S.se, n.value, n.se});
    }
    RunReport rep;
    rep.files.push_back(detail::write_csv(c.output + "_entropy.csv", "entropy",
                                          {"t", "entropy", "entropy_se", "mean_n", "mean_n_se"}, rows));
    return rep;
}

inline RunReport run_scan(const RunConfig& c, const RunOptions& o) {
    std::vector<std::vector<double>> rows;
    for (double v : c.scan.values) {
        SystemParams p = c.params;
        (c.scan.parameter == "omega2" ? p.omega2 : p.delta_mod) = v;
        MinEntropyOptions me;
        me.t_start = c.scan.t_start;
        me.master_seed = c.master_seed;
        me.dt = c.dt;
        me.workers = o.workers;
        me.groups = c.groups;
        me.scheme = c.scheme;
        me.tail_limit = c.tail_limit;
        const auto s = min_entropy_over_period(p, c.frame, c.dim, detail::ensemble_size(c, o), c.scan.period_samples, me);
        const auto lam = lyapunov_periodic(p, {c.alpha0(), c.lyapunov_periods, c.transient_periods, c.tol});
        rows.push_back({v, s.value, s.se, s.time, lam.lambda_max});
        if (o.log) *o.log << c.scan.parameter << "=" << v << " min entropy " << s.value << "\n";
    }
    RunReport rep;
    rep.files.push_back(detail::write_csv(c.output + "_scan.csv", "scan",
                                          {c.scan.parameter, "min_entropy", "se", "t_min", "lambda_max"}, rows));
    return rep;
}

/// Runs `cmd` and writes its data files and manifest. Errors propagate as
/// ddao::Error subclasses.
inline RunReport run_command(Command cmd, RunConfig c, const RunOptions& o) {
    if (o.seed) c.master_seed = *o.seed;
    if (o.out) c.output = *o.out;
    if (o.workers == 0) throw ConfigError("workers", "must be positive");
    validate(c, cmd);
    const auto start = std::chrono::steady_clock::now();
    RunReport rep;
    switch (cmd) {
    case Command::poincare: rep = run_poincare(c); break;
    case Command::lyapunov: rep = run_lyapunov(c); break;
    case Command::classical_trajectory: rep = run_classical_trajectory(c); break;
    case Command::qsd_ensemble: rep = run_qsd_ensemble(c, o); break;
    case Command::wigner: rep = run_wigner(c, o); break;
    case Command::entropy: rep = run_entropy(c, o); break;
    case Command::scan: rep = run_scan(c, o); break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : rep.files) files.push_back({{"role", f.role}, {"path", f.path}, {"columns", f.columns}});
    nlohmann::json config = to_json(c);
    detail::write_json(c.output + "_manifest.json", {{"tool", "ddao"},
                                                     {"version", version},
                                                     {"command", to_string(cmd)},
                                                     {"config", config},
                                                     {"master_seed", c.master_seed},
                                                     {"workers", o.workers},
                                                     {"full_scale", o.full_scale},
                                                     {"ensemble_size", detail::ensemble_size(c, o)},
                                                     {"complete", rep.complete},
                                                     {"wall_time_s", wall},
                                                     {"files", files},
                                                     {"summary", rep.summary}});
    return rep;
}

}  // namespace ddao
