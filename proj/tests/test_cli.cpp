#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("vimtool_test_" + std::to_string(::getpid()) + "_" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write_config(const std::string& name, const json& j) {
        const fs::path p = dir_ / name;
        std::ofstream(p) << j.dump();
        return p;
    }

    // Runs the tool, returns its exit status; stderr goes to dir_/stderr.txt.
    int run(const std::string& args, const std::string& env = "") {
        const std::string cmd = env + " " VIMTOOL_PATH " " + args + " --quiet 2>" + (dir_ / "stderr.txt").string() + " >/dev/null";
        const int st = std::system(cmd.c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    }

    json error_line() { return json::parse(slurp(dir_ / "stderr.txt")); }

    static json small(double x0 = 1.0) {
        return {{"model", {{"family", "LogisticFeller"}, {"kappa", 1}, {"gamma", 0}, {"K", 0}, {"beta", 1}}},
                {"mc", {{"seed", 17}, {"n_paths", 20}, {"dt", 0.01}, {"horizon", 2}}},
                {"excursion", {{"epsilon", {0.4, 0.2}}}},
                {"tree", {{"x0", x0}}}};
    }

    fs::path dir_;
};

std::string sha256sum(const fs::path& p) {
    const std::string cmd = "sha256sum '" + p.string() + "'";
    std::array<char, 128> buf{};
    FILE* f = popen(cmd.c_str(), "r");
    std::string out;
    while (f && fgets(buf.data(), buf.size(), f)) out += buf.data();
    if (f) pclose(f);
    return out.substr(0, 64);
}

}  // namespace

TEST_F(Cli, InvalidConfigExitsOne) {
    json j = small();
    j["mc"]["dt"] = -0.01;
    const auto cfg = write_config("bad.json", j);
    EXPECT_EQ(run("analyze --config " + cfg.string() + " --out " + (dir_ / "o").string()), 1);
    EXPECT_EQ(error_line()["exit_code"], 1);
    const json m = json::parse(slurp(dir_ / "o" / "manifest.json"));
    EXPECT_EQ(m["exit_code"], 1);
    EXPECT_EQ(run("frobnicate"), 1);
    EXPECT_EQ(run("analyze --config " + (dir_ / "missing.json").string()), 1);
}

TEST_F(Cli, AssumptionFailureExitsTwo) {
    const fs::path out = dir_ / "o";
    EXPECT_EQ(run("analyze --config " VIM_SOURCE_DIR "/configs/quadratic_diffusion.json --out " + out.string()), 2);
    EXPECT_EQ(error_line()["exit_code"], 2);
    EXPECT_TRUE(fs::exists(out / "assumption_report.json"));
}

TEST_F(Cli, AnalyzeCriticalFeller) {
    const fs::path out = dir_ / "o";
    ASSERT_EQ(run("analyze --config " + write_config("c.json", small()).string() + " --out " + out.string()), 0);
    const json r = json::parse(slurp(out / "report.json"));
    EXPECT_EQ(r["regime"], "Critical");
    EXPECT_NEAR(r["theta"].get<double>(), 1.0, 1e-6);
}

TEST_F(Cli, EmptyStartGivesSingleIsland) {
    const fs::path out = dir_ / "o";
    ASSERT_EQ(run("simulate-tree --config " + write_config("c.json", small(0.0)).string() + " --out " + out.string()), 0);
    std::istringstream csv(slurp(out / "tree.csv"));
    std::string line;
    int lines = 0;
    while (std::getline(csv, line)) ++lines;
    EXPECT_EQ(lines, 2);
}

TEST_F(Cli, SameSeedSameBytes) {
    const auto cfg = write_config("c.json", small()).string();
    ASSERT_EQ(run("simulate-paths --config " + cfg + " --out " + (dir_ / "a").string()), 0);
    ASSERT_EQ(run("simulate-paths --config " + cfg + " --out " + (dir_ / "b").string()), 0);
    ASSERT_EQ(run("simulate-paths --config " + cfg + " --seed 18 --out " + (dir_ / "c").string()), 0);
    EXPECT_EQ(slurp(dir_ / "a" / "paths.csv"), slurp(dir_ / "b" / "paths.csv"));
    EXPECT_NE(slurp(dir_ / "a" / "paths.csv"), slurp(dir_ / "c" / "paths.csv"));
}

TEST_F(Cli, SeedPrecedence) {
    const auto cfg = write_config("c.json", small()).string();
    ASSERT_EQ(run("analyze --config " + cfg + " --out " + (dir_ / "a").string(), "VIM_SEED=99"), 0);
    json m = json::parse(slurp(dir_ / "a" / "manifest.json"));
    EXPECT_EQ(m["seed"], 99);
    EXPECT_EQ(m["seed_source"], "VIM_SEED");
    ASSERT_EQ(run("analyze --config " + cfg + " --seed 7 --out " + (dir_ / "b").string(), "VIM_SEED=99"), 0);
    m = json::parse(slurp(dir_ / "b" / "manifest.json"));
    EXPECT_EQ(m["seed"], 7);
    EXPECT_EQ(m["seed_source"], "--seed");
    EXPECT_EQ(run("analyze --config " + cfg, "VIM_SEED=x1"), 1);
}

TEST_F(Cli, ManifestChecksumsMatchFiles) {
    const fs::path out = dir_ / "o";
    ASSERT_EQ(run("simulate-excursions --config " + write_config("c.json", small()).string() + " --out " + out.string()), 0);
    const json m = json::parse(slurp(out / "manifest.json"));
    EXPECT_EQ(m["exit_code"], 0);
    ASSERT_FALSE(m["files"].empty());
    for (const auto& f : m["files"]) {
        const fs::path p = out / f["name"].get<std::string>();
        EXPECT_EQ(sha256sum(p), f["sha256"].get<std::string>()) << p;
        EXPECT_EQ(fs::file_size(p), f["bytes"].get<std::size_t>());
    }
}
