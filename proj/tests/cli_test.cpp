// Drives the ehrx executable end to end.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <gtest/gtest.h>

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
    const std::string cmd = std::string(EHRX_CLI_PATH) + " " + args + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir = fs::temp_directory_path() / ("ehrx_cli_test_" + std::to_string(::getpid()));
    void SetUp() override { fs::create_directories(dir); }
    void TearDown() override { fs::remove_all(dir); }
};

TEST_F(Cli, RunWritesCsv) {
    const auto out = dir / "run.csv";
    ASSERT_EQ(run_cli("run --horizon 5000 --warmup 100 --seeds 2 --policy genie --out " + out.string()), 0);
    const auto text = slurp(out);
    EXPECT_EQ(text.rfind("# ehrx-csv schema=1 kind=run", 0), 0u);
    EXPECT_NE(text.find("\n0,"), std::string::npos);
    EXPECT_NE(text.find("\n1,"), std::string::npos);
    EXPECT_NE(text.find(",genie,"), std::string::npos);
}

TEST_F(Cli, UnwritableOutputIsIoError) {
    EXPECT_EQ(run_cli("sweep-v --horizon 1000 --warmup 0 --seeds 1 --out /nonexistent-dir/x.csv"), 3);
}

TEST_F(Cli, BadConfigIsUsageError) {
    const auto cfg = dir / "bad.json";
    std::ofstream(cfg) << R"({"energy": {"eta": 2}})";
    EXPECT_EQ(run_cli("run --config " + cfg.string()), 2);
    EXPECT_EQ(run_cli("run --config " + (dir / "missing.json").string()), 3);
    EXPECT_EQ(run_cli("frobnicate"), 2);
}

TEST_F(Cli, ValidateLemmaExitStatus) {
    const auto cfg = dir / "n3.json";
    std::ofstream(cfg) << R"({"channel": {"means": [1, 2, 3], "access_probs": [0.2, 0.3, 0.4]}})";
    EXPECT_EQ(run_cli("validate-lemma --config " + cfg.string() + " --samples 300000 --out " + (dir / "a.csv").string()), 0);
    EXPECT_EQ(run_cli("validate-lemma --config " + cfg.string() + " --samples 300000 --tolerance 1e-9 --out " +
                      (dir / "b.csv").string()),
              1);
    EXPECT_NE(slurp(dir / "b.csv").find("result=fail"), std::string::npos);
}

TEST_F(Cli, SweepQIsReproducible) {
    const auto cfg = dir / "q.json";
    std::ofstream(cfg) << R"({"sweep": {"q_values": [0.05, 0.1], "c_values": [1]}})";
    const std::string args = "sweep-q --config " + cfg.string() + " --horizon 5000 --warmup 100 --seeds 2 --out ";
    ASSERT_EQ(run_cli(args + (dir / "a.csv").string()), 0);
    ASSERT_EQ(run_cli(args + (dir / "b.csv").string() + " --jobs 2"), 0);
    EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
    EXPECT_NE(slurp(dir / "a.csv").find("# argmax c=1 q="), std::string::npos);
}

}  // namespace
