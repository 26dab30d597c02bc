#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli()
{
    const char* p = std::getenv("WAVEGRF_CLI");
    return p ? p : "";
}

fs::path workdir()
{
    static const fs::path d = [] {
        auto p = fs::temp_directory_path() / "wavegrf_cli_test";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return d;
}

int run(const std::string& args)
{
    const std::string cmd = cli() + " " + args + " > " + (workdir() / "stdout.txt").string() + " 2> "
                            + (workdir() / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void expect_same_tree(const fs::path& a, const fs::path& b)
{
    int files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const auto other = b / e.path().filename();
        ASSERT_TRUE(fs::exists(other)) << other;
        EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
        ++files;
    }
    EXPECT_GT(files, 0);
}

class Cli : public ::testing::Test
{
protected:
    void SetUp() override
    {
        if (cli().empty())
            GTEST_SKIP() << "WAVEGRF_CLI not set";
    }
};

} // namespace

TEST_F(Cli, UsageErrorsExitWithTwo)
{
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("tables --no-such-flag"), 2);
    const auto out = workdir() / "bad";
    EXPECT_EQ(run("tables --dt 5 --out " + out.string()), 2);
    const auto err = nlohmann::json::parse(slurp(out / "error.json"));
    EXPECT_EQ(err["exit_code"], 2);
    EXPECT_EQ(err["error"], "config");
    EXPECT_EQ(err["command"], "tables");
    EXPECT_EQ(nlohmann::json::parse(slurp(workdir() / "stderr.txt")), err);
}

TEST_F(Cli, NumericalFailureExitsWithThree)
{
    const auto out = workdir() / "num";
    EXPECT_EQ(run("sample --J-max 6 --K-max 2 --out " + out.string()), 3);
    EXPECT_EQ(nlohmann::json::parse(slurp(out / "error.json"))["error"], "numerical");
}

TEST_F(Cli, VersionFlag)
{
    EXPECT_EQ(run("--version"), 0);
    EXPECT_NE(slurp(workdir() / "stdout.txt").find("0.1.0"), std::string::npos);
}

TEST_F(Cli, TablesOutput)
{
    const auto out = workdir() / "tables";
    ASSERT_EQ(run("tables --J-max 6 --out " + out.string()), 0);
    const std::string csv = slurp(out / "tables.csv");
    EXPECT_EQ(csv.rfind("# command: tables\n", 0), 0u);
    EXPECT_NE(csv.find("\nJ,p,cond_single_scale,cond_wavelet,cond_tapered,"), std::string::npos);
    EXPECT_NE(csv.find("\n6,64,"), std::string::npos);
    const auto meta = nlohmann::json::parse(slurp(out / "tables.json"));
    EXPECT_EQ(meta["config"]["J_max"], 6);
    EXPECT_EQ(meta["meta"]["command"], "tables");
}

TEST_F(Cli, RerunsAreByteIdentical)
{
    for (const std::string cmd : {"sample --J-max 6 --samples 2", "mlmc --J-max 6 --runs 2",
                                  "krige --J-max 7 --dt 8 --kernel matern52 --observations 8", "pattern --J-max 6"}) {
        const auto a = workdir() / "rerun_a", b = workdir() / "rerun_b";
        fs::remove_all(a);
        fs::remove_all(b);
        ASSERT_EQ(run(cmd + " --seed 5 --out " + a.string()), 0) << cmd;
        ASSERT_EQ(run(cmd + " --seed 5 --threads 1 --out " + b.string()), 0) << cmd;
        expect_same_tree(a, b);
    }
}

TEST_F(Cli, SeedsChangeSamples)
{
    const auto a = workdir() / "seed_a", b = workdir() / "seed_b";
    ASSERT_EQ(run("sample --J-max 6 --seed 1 --out " + a.string()), 0);
    ASSERT_EQ(run("sample --J-max 6 --seed 2 --out " + b.string()), 0);
    EXPECT_NE(slurp(a / "sample_coefficients.csv"), slurp(b / "sample_coefficients.csv"));
}

TEST_F(Cli, ConfigFileMatchesFlags)
{
    const auto cfg = workdir() / "run.toml";
    {
        std::ofstream out(cfg);
        out << "J-max = 6\nkernel = \"matern32\"\n";
    }
    const auto a = workdir() / "cfg_a", b = workdir() / "cfg_b";
    ASSERT_EQ(run("--config " + cfg.string() + " tables --out " + a.string()), 0);
    ASSERT_EQ(run("tables --J-max 6 --kernel matern32 --out " + b.string()), 0);
    expect_same_tree(a, b);
}

TEST_F(Cli, FiltersDump)
{
    const auto out = workdir() / "filters";
    ASSERT_EQ(run("filters-dump --out " + out.string()), 0);
    const std::string csv = slurp(out / "filters.csv");
    EXPECT_NE(csv.find("\nk,primal_low,dual_low,primal_high,dual_high"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "filters.json"));
}
