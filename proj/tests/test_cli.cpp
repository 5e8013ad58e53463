#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"
#include "qbandit/amp_core.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("qbandit_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Result run(const std::string& args) {
        const auto out = dir_ / "stdout.txt";
        const auto err = dir_ / "stderr.txt";
        const std::string cmd = std::string(QBANDIT_CLI_PATH) + " " + args + " >" + out.string() +
                                " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        Result r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

    fs::path dir_;
};

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

}  // namespace

TEST_F(Cli, missing_config_exits_2) {
    const auto r = run("run --config " + (dir_ / "absent.json").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("absent.json"), std::string::npos);
}

TEST_F(Cli, malformed_config_exits_2) {
    std::ofstream(dir_ / "bad.json") << "{ \"horizon\": [";
    EXPECT_EQ(run("run --config " + (dir_ / "bad.json").string()).code, 2);
}

TEST_F(Cli, unknown_policy_rejected_before_running) {
    const auto r = run("run --policies qb,thompson --out " + (dir_ / "o").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("thompson"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "o"));
}

TEST_F(Cli, unknown_flag_is_usage_error) { EXPECT_EQ(run("run --bogus 1").code, 2); }

TEST_F(Cli, unwritable_output_is_runtime_error) {
    std::ofstream(dir_ / "file") << "x";
    const auto r = run("run --horizon 10 --reps 1 --out " + (dir_ / "file" / "sub").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, repeated_seed_flag_is_idempotent_and_outputs_reproducible) {
    const std::string common = " --horizon 300 --reps 4 --policies qb,exp3ix,ucb1 --out ";
    ASSERT_EQ(run("run --seed 7 --seed 7" + common + (dir_ / "a").string()).code, 0);
    ASSERT_EQ(run("run --seed 7" + common + (dir_ / "b").string()).code, 0);
    ASSERT_EQ(run("run --seed 7" + common + (dir_ / "c").string()).code, 0);
    const auto a = slurp(dir_ / "a" / "regret.csv");
    EXPECT_EQ(lines(a).size(), 1u + 3 * 300);
    EXPECT_EQ(a, slurp(dir_ / "b" / "regret.csv"));
    EXPECT_EQ(a, slurp(dir_ / "c" / "regret.csv"));
    ASSERT_EQ(run("run --seed 8" + common + (dir_ / "d").string()).code, 0);
    EXPECT_NE(a, slurp(dir_ / "d" / "regret.csv"));
}

TEST_F(Cli, thread_count_does_not_change_outputs) {
    const std::string args = "run --horizon 200 --reps 6 --out ";
    ASSERT_EQ(run(args + (dir_ / "one").string()).code, 0);
    const std::string cmd = "QBANDIT_THREADS=3 ";
    const int status = std::system((cmd + QBANDIT_CLI_PATH + " " + args + (dir_ / "three").string() +
                                    " >/dev/null 2>&1")
                                       .c_str());
    ASSERT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
    EXPECT_EQ(slurp(dir_ / "one" / "regret.csv"), slurp(dir_ / "three" / "regret.csv"));
}

TEST_F(Cli, config_file_and_flag_precedence) {
    std::ofstream(dir_ / "cfg.json") << R"({"horizon": 50, "repetitions": 2, "policies": ["qb"],
                                            "output_dir": ")" << (dir_ / "from_cfg").string() << R"("})";
    ASSERT_EQ(run("run --config " + (dir_ / "cfg.json").string()).code, 0);
    EXPECT_EQ(lines(slurp(dir_ / "from_cfg" / "regret.csv")).size(), 51u);
    ASSERT_EQ(run("run --config " + (dir_ / "cfg.json").string() + " --horizon 20 --out " +
                  (dir_ / "flag").string())
                  .code,
              0);
    EXPECT_EQ(lines(slurp(dir_ / "flag" / "regret.csv")).size(), 21u);
}

TEST_F(Cli, print_config_dumps_resolved_json) {
    const auto r = run("run --print-config --seed 9");
    ASSERT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["seed"], 9);
    EXPECT_EQ(j["schema"], 1);
    EXPECT_EQ(j["horizon"], 3000);
}

TEST_F(Cli, sweep_emits_one_row_per_policy_and_k) {
    const auto r = run("sweep --k 5,10,15 --horizon 100 --reps 2 --out " + dir_.string());
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = lines(slurp(dir_ / "final.csv"));
    ASSERT_EQ(rows.size(), 1u + 3 * 7);
    EXPECT_EQ(rows[0], "policy,K,mean,std");
    EXPECT_EQ(rows.back().rfind("eps-greedy,15,", 0), 0u);
}

TEST_F(Cli, trace_rows_respect_phase_range) {
    ASSERT_EQ(run("trace --horizon 1500 --out " + dir_.string()).code, 0);
    const auto rows = lines(slurp(dir_ / "phase_trace.csv"));
    ASSERT_EQ(rows.size(), 1501u);
    EXPECT_EQ(rows[0], "t,p_m,dbar,phi,sigma");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        double t = 0, p_m = 0, dbar = 0, phi = 0, sigma = 0;
        ASSERT_EQ(std::sscanf(rows[i].c_str(), "%lf,%lf,%lf,%lf,%lf", &t, &p_m, &dbar, &phi, &sigma), 5);
        // Values are printed with 12 significant digits.
        ASSERT_LE(phi, 0.0);
        ASSERT_GE(phi, qbandit::amp::phi_min(p_m) - 1e-9);
        ASSERT_GE(sigma, qbandit::amp::sigma_min(p_m) - 1e-9);
        ASSERT_LE(sigma, 1.0);
    }
}

TEST_F(Cli, selftest_passes) {
    const auto r = run("selftest");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("amp-core:"), std::string::npos);
    EXPECT_NE(r.out.find("0 failed"), std::string::npos);
}
