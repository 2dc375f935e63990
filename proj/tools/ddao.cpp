// ddao <subcommand> --config <path> [--seed N] [--workers K] [--out PREFIX] [--full-scale]

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "ddao/runner.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ddao::IoError("cannot read config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* describe(ddao::Command cmd) {
    switch (cmd) {
    case ddao::Command::poincare: return "stroboscopic Poincare section of the classical map";
    case ddao::Command::lyapunov: return "largest Lyapunov exponent of the classical map";
    case ddao::Command::classical_trajectory: return "classical amplitude alpha(t)";
    case ddao::Command::qsd_ensemble: return "QSD ensemble: mean excitation, snapshots, density matrix";
    case ddao::Command::wigner: return "Wigner function of the ensemble state at the snapshot time";
    case ddao::Command::entropy: return "von Neumann entropy time series";
    case ddao::Command::scan: return "minimum entropy over a period across a parameter scan";
    }
    return "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Double-driven dissipative Kerr oscillator: classical maps, QSD ensembles, Wigner and entropy"};
    app.require_subcommand(1);

    std::string config_path;
    ddao::RunOptions opt;
    std::uint64_t seed = 0;
    std::string out;
    unsigned workers = opt.workers;
    std::size_t stop_after = 0;

    for (ddao::Command cmd : ddao::all_commands) {
        auto* sub = app.add_subcommand(ddao::to_string(cmd), describe(cmd));
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--workers", workers, "worker threads")->capture_default_str();
        sub->add_option("--out", out, "output path prefix (overrides the config)");
        sub->add_flag("--full-scale", opt.full_scale, "use full_ensemble_size trajectories");
        if (cmd == ddao::Command::qsd_ensemble) {
            sub->add_flag("--resume", opt.resume, "continue from <out>_checkpoint.json");
            sub->add_option("--stop-after", stop_after, "stop after this many trajectory groups (keeps the checkpoint)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const auto* sub = app.get_subcommands().front();
    const auto cmd = *ddao::parse_command(sub->get_name());
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--out")) opt.out = out;
    if (stop_after > 0) opt.stop_after = stop_after;
    opt.workers = workers;

    try {
        const auto cfg = ddao::parse_config(read_file(config_path), cmd);
        const auto rep = ddao::run_command(cmd, cfg, opt);
        for (const auto& f : rep.files) std::cout << f.role << ": " << f.path << "\n";
        if (!rep.complete) std::cout << "stopped early; rerun with --resume to finish\n";
        return 0;
    } catch (const ddao::Error& e) {
        std::cerr << "ddao: " << e.what() << "\n";
        return ddao::exit_code(e.category());
    } catch (const std::exception& e) {
        std::cerr << "ddao: internal error: " << e.what() << "\n";
        return 1;
    }
}
