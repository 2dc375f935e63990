// Drives the ddao executable end to end.

#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path tmp_root = DDAO_TEST_TMP;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir = tmp_root / info->name();
        fs::remove_all(dir);
        fs::create_directories(dir);
    }

    fs::path write_config(const std::string& name, const std::string& text) {
        const auto p = dir / name;
        std::ofstream(p) << text;
        return p;
    }

    // Exit status of `ddao args`; combined output goes to dir/log.txt.
    int run(const std::string& args) {
        const std::string cmd = std::string("\"") + DDAO_CLI + "\" " + args + " > \"" + (dir / "log.txt").string() +
                                "\" 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string log() const { return slurp(dir / "log.txt"); }
    std::string out(const std::string& prefix) const { return (dir / prefix).string(); }

    fs::path dir;
};

// A small, quickly converging ensemble: one modulation period at dim 16.
const std::string small_qsd = R"({"chi": 0.7, "delta": -1, "delta_mod": 5, "omega1": 1, "omega2": 0.5,
                                  "dim": 16, "dt": 1e-3, "t_end": 1.3, "snapshot_t0": 1.3,
                                  "ensemble_size": 6, "groups": 3, "samples_per_period": 5})";

}  // namespace

TEST_F(Cli, PoincareWritesTwoColumnSection) {
    const auto cfg = write_config("p.json", R"({"chi": 0.7, "delta": -15, "delta_mod": 5, "omega1": 10.2,
                                                "omega2": 10.2})");
    ASSERT_EQ(run("poincare --config " + cfg.string() + " --out " + out("p")), 0) << log();
    const auto rows = lines(dir / "p_poincare.csv");
    ASSERT_EQ(rows.size(), 5001u);
    EXPECT_EQ(rows[0], "x,y");
    for (std::size_t k = 1; k < rows.size(); ++k) ASSERT_EQ(std::count(rows[k].begin(), rows[k].end(), ','), 1);
}

TEST_F(Cli, ClassicalTrajectoryColumns) {
    const auto cfg = write_config("c.json", R"({"chi": 0.7, "delta": -15, "omega1": 10.2, "t_end": 2,
                                                "trajectory_samples": 21})");
    ASSERT_EQ(run("classical-trajectory --config " + cfg.string() + " --out " + out("c")), 0) << log();
    const auto rows = lines(dir / "c_trajectory.csv");
    ASSERT_EQ(rows.size(), 22u);
    EXPECT_EQ(rows[0], "t,x,y,n");
}

TEST_F(Cli, EnsembleIsDeterministic) {
    const auto cfg = write_config("q.json", small_qsd);
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --seed 5 --out " + out("a")), 0) << log();
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --seed 5 --out " + out("b")), 0) << log();
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --seed 6 --out " + out("c")), 0) << log();
    for (const char* suffix : {"_mean_n.csv", "_snapshots.csv", "_rho.csv"}) {
        const auto a = slurp(out(std::string("a") + suffix));
        ASSERT_FALSE(a.empty());
        EXPECT_EQ(a, slurp(out(std::string("b") + suffix))) << suffix;
    }
    EXPECT_NE(slurp(out("a_rho.csv")), slurp(out("c_rho.csv")));
}

TEST_F(Cli, EnsembleIndependentOfWorkers) {
    const auto cfg = write_config("q.json", small_qsd);
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --workers 1 --out " + out("w1")), 0) << log();
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --workers 3 --out " + out("w3")), 0) << log();
    EXPECT_EQ(slurp(out("w1_rho.csv")), slurp(out("w3_rho.csv")));
    EXPECT_EQ(slurp(out("w1_mean_n.csv")), slurp(out("w3_mean_n.csv")));
}

TEST_F(Cli, StopAndResumeReproducesFullRun) {
    const auto cfg = write_config("q.json", small_qsd);
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --workers 1 --out " + out("full")), 0) << log();
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --workers 1 --stop-after 1 --out " + out("part")), 0)
        << log();
    EXPECT_NE(log().find("stopped early"), std::string::npos);
    EXPECT_TRUE(fs::exists(out("part_checkpoint.json")));
    EXPECT_FALSE(fs::exists(out("part_rho.csv")));
    const auto manifest = nlohmann::json::parse(slurp(out("part_manifest.json")));
    EXPECT_FALSE(manifest.at("complete").get<bool>());

    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --workers 1 --resume --out " + out("part")), 0)
        << log();
    EXPECT_FALSE(fs::exists(out("part_checkpoint.json")));
    EXPECT_EQ(slurp(out("full_rho.csv")), slurp(out("part_rho.csv")));
    EXPECT_EQ(slurp(out("full_mean_n.csv")), slurp(out("part_mean_n.csv")));
}

TEST_F(Cli, ResumeRejectsDifferentConfiguration) {
    const auto cfg = write_config("q.json", small_qsd);
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --stop-after 1 --out " + out("r")), 0) << log();
    EXPECT_EQ(run("qsd-ensemble --config " + cfg.string() + " --seed 77 --resume --out " + out("r")), 2);
    EXPECT_NE(log().find("resume"), std::string::npos);
}

TEST_F(Cli, ManifestRecordsRun) {
    const auto cfg = write_config("q.json", small_qsd);
    ASSERT_EQ(run("qsd-ensemble --config " + cfg.string() + " --seed 12 --workers 2 --out " + out("m")), 0)
        << log();
    const auto m = nlohmann::json::parse(slurp(out("m_manifest.json")));
    EXPECT_EQ(m.at("tool"), "ddao");
    EXPECT_EQ(m.at("command"), "qsd-ensemble");
    EXPECT_EQ(m.at("master_seed"), 12);
    EXPECT_EQ(m.at("config").at("master_seed"), 12);
    EXPECT_EQ(m.at("config").at("dim"), 16);
    EXPECT_EQ(m.at("workers"), 2);
    EXPECT_EQ(m.at("ensemble_size"), 6);
    EXPECT_TRUE(m.at("complete").get<bool>());
    EXPECT_FALSE(m.at("version").get<std::string>().empty());
    std::vector<std::string> roles;
    for (const auto& f : m.at("files")) roles.push_back(f.at("role"));
    EXPECT_EQ(roles, (std::vector<std::string>{"mean_n", "snapshots", "density_matrix"}));
}

TEST_F(Cli, WignerGridAndSidecar) {
    const auto cfg = write_config("w.json", R"({"chi": 0.7, "delta": -1, "delta_mod": 5, "omega1": 1,
                                                "omega2": 0.5, "dim": 12, "dt": 1e-3, "snapshot_t0": 1.3,
                                                "ensemble_size": 4, "groups": 2, "grid": {"n": 32}})");
    ASSERT_EQ(run("wigner --config " + cfg.string() + " --out " + out("w")), 0) << log();
    const auto rows = lines(dir / "w_wigner.csv");
    ASSERT_EQ(rows.size(), 32u);
    EXPECT_EQ(std::count(rows[0].begin(), rows[0].end(), ','), 31);
    const auto meta = nlohmann::json::parse(slurp(out("w_wigner.json")));
    EXPECT_EQ(meta.at("nx"), 32);
    EXPECT_TRUE(meta.at("normalization_ok").get<bool>());
}

TEST_F(Cli, ExitCodes) {
    EXPECT_EQ(run("poincare --config " + (dir / "missing.json").string()), 5);
    const auto bad = write_config("bad.json", R"({"delta_mod": 0})");
    EXPECT_EQ(run("poincare --config " + bad.string()), 2);
    EXPECT_NE(log().find("delta_mod"), std::string::npos);
    EXPECT_EQ(run("simulate --config " + bad.string()), 2);
    EXPECT_EQ(run("poincare"), 2);

    const auto trunc = write_config("t.json", R"({"chi": 0.7, "delta": -15, "delta_mod": 5, "omega1": 10.2,
                                                  "omega2": 10.2, "dim": 6, "t_end": 1.3, "snapshot_t0": 1.3,
                                                  "ensemble_size": 2, "groups": 1})");
    EXPECT_EQ(run("qsd-ensemble --config " + trunc.string() + " --out " + out("t")), 4);
    EXPECT_NE(log().find("truncation"), std::string::npos);

    const auto ok = write_config("ok.json", R"({"delta_mod": 5, "omega1": 1, "n_points": 3})");
    fs::create_directories(dir / "ro");
    std::ofstream(dir / "ro" / "file") << "x";
    EXPECT_EQ(run("poincare --config " + ok.string() + " --out " + (dir / "ro" / "file" / "p").string()), 5);
}
