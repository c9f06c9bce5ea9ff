#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_support.hpp"

using namespace foreco;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string err;
};

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("foreco_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    CliRun invoke(const std::string& args) const {
        const fs::path err = dir_ / "stderr.txt";
        const std::string cmd = std::string("SOURCE_DATE_EPOCH= ") + FORECO_CLI_PATH + " " + args + " 2>" +
                                err.string() + " >/dev/null";
        const int status = std::system(cmd.c_str());
        CliRun r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.err = slurp(err);
        return r;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    fs::path path(const std::string& name) const { return dir_ / name; }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream(path(name)) << content;
    }

    fs::path dir_;
};

std::string last_line(const std::string& s) {
    auto end = s.find_last_not_of('\n');
    auto start = s.rfind('\n', end);
    return s.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

}  // namespace

TEST_F(Cli, MissingTraceIsIoError) {
    const CliRun r = invoke("simulate --trace /nonexistent.csv --channel /nonexistent.json --out-dir " + path("o").string() +
                      " --policy repeat-last");
    EXPECT_EQ(r.code, 2);
    const Json j = Json::parse(last_line(r.err));
    EXPECT_EQ(j["error"]["kind"], "io");
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(invoke("").code, 1);
    EXPECT_EQ(invoke("train --trace x.csv").code, 1);
    EXPECT_EQ(invoke("frobnicate").code, 1);
}

TEST_F(Cli, GenTraceWritesRows) {
    ASSERT_EQ(invoke("gen-trace --duration-s 30 --seed 5 --out " + path("t.csv").string()).code, 0);
    const Trace t = read_trace_csv(path("t.csv").string());
    EXPECT_EQ(t.size(), 1500u);
    EXPECT_EQ(t.dim(), 6u);
}

TEST_F(Cli, TrainAutoPicksTrueLag) {
    Rng rng(6);
    const Trace t = foreco::testing::simulate_var(foreco::testing::var_with_lag(3, 1, rng), Eigen::VectorXd::Zero(3), 4000, 0.1, 8);
    write_trace_csv(path("var1.csv").string(), t);
    ASSERT_EQ(invoke("train --trace " + path("var1.csv").string() + " --lag auto --max-lag 5 --out " +
                  path("m.json").string())
                  .code,
              0);
    const Json report = read_json_file(path("m.aic.json").string());
    EXPECT_EQ(report["best_lag"], 1);
    EXPECT_EQ(report["aic"].size(), 5u);
    const VarModel m = var_model_from_json(read_json_file(path("m.json").string()));
    EXPECT_EQ(m.lag, 1u);
    EXPECT_FALSE(m.trained_at);
}

TEST_F(Cli, AdamWithoutEpochsWarnsAndKeepsZeros) {
    write_trace_csv(path("t.csv").string(), foreco::testing::rotation_var1(2, 200));
    const CliRun r = invoke("train --trace " + path("t.csv").string() + " --lag 1 --trainer adam --epochs 0 --out " +
                      path("m.json").string());
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.err.find("--epochs 0"), std::string::npos);
    const VarModel m = var_model_from_json(read_json_file(path("m.json").string()));
    EXPECT_EQ(to_param_matrix(m), Eigen::MatrixXd::Zero(3, 2));
}

TEST_F(Cli, CleanChannelReproducesTrace) {
    ASSERT_EQ(invoke("gen-trace --duration-s 10 --out " + path("t.csv").string()).code, 0);
    write("ch.json", R"({"p_if": 0, "n_stations": 1, "seed": 3})");
    const CliRun r = invoke("simulate --trace " + path("t.csv").string() + " --channel " + path("ch.json").string() +
                      " --policy repeat-last --out-dir " + path("out").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const Json stats = read_json_file(path("out/stats.json").string());
    EXPECT_EQ(stats["on_time"], 500);
    const Json summary = read_json_file(path("out/summary.json").string());
    EXPECT_EQ(summary["rmse"], 0.0);
    const Json manifest = read_json_file(path("out/manifest.json").string());
    EXPECT_EQ(manifest["inputs"].size(), 2u);
    EXPECT_EQ(manifest["outputs"].size(), 4u);
    EXPECT_TRUE(manifest["timings"].is_null());
}

TEST_F(Cli, SimulateIsByteReproducible) {
    ASSERT_EQ(invoke("gen-trace --duration-s 10 --out " + path("t.csv").string()).code, 0);
    ASSERT_EQ(invoke("train --trace " + path("t.csv").string() + " --lag 3 --out " + path("m.json").string()).code, 0);
    write("ch.json", R"({"p_if": 0.6, "t_if_slots": 16, "n_stations": 15, "seed": 11})");
    for (const char* out : {"a", "b"}) {
        ASSERT_EQ(invoke("simulate --trace " + path("t.csv").string() + " --channel " + path("ch.json").string() +
                      " --model " + path("m.json").string() + " --policy foreco --out-dir " + path(out).string())
                      .code,
                  0);
    }
    for (const char* f : {"outcomes.csv", "executed.csv", "stats.json", "summary.json"}) {
        EXPECT_EQ(slurp(path("a") / f), slurp(path("b") / f)) << f;
    }
    const Json ma = read_json_file(path("a/manifest.json").string());
    const Json mb = read_json_file(path("b/manifest.json").string());
    EXPECT_EQ(ma["outputs"], mb["outputs"]);
}

TEST_F(Cli, BadChannelIsConfigError) {
    ASSERT_EQ(invoke("gen-trace --duration-s 2 --out " + path("t.csv").string()).code, 0);
    write("ch.json", R"({"p_if": 3})");
    const CliRun r = invoke("simulate --trace " + path("t.csv").string() + " --channel " + path("ch.json").string() +
                      " --policy repeat-last --out-dir " + path("out").string());
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(Json::parse(last_line(r.err))["error"]["kind"], "config");
}

TEST_F(Cli, SweepWritesGrid) {
    ASSERT_EQ(invoke("gen-trace --duration-s 5 --dim 3 --out " + path("t.csv").string()).code, 0);
    ASSERT_EQ(invoke("train --trace " + path("t.csv").string() + " --lag 2 --out " + path("m.json").string()).code, 0);
    write("spec.json",
          R"({"probs": [0.1, 0.9], "durations": [4, 32], "robot_counts": [15], "repetitions": 2, "model": "m.json"})");
    const CliRun r = invoke("sweep --trace " + path("t.csv").string() + " --spec " + path("spec.json").string() +
                      " --jobs 2 --out-dir " + path("sw").string());
    ASSERT_EQ(r.code, 0) << r.err;
    const Json res = read_json_file(path("sw/sweep_result.json").string());
    EXPECT_EQ(res["cells"].size(), 4u);
    EXPECT_EQ(res["cells"][0]["foreco"]["rmse"].size(), 2u);
    EXPECT_TRUE(fs::exists(path("sw/rmse_foreco_15.csv")));
    EXPECT_TRUE(fs::exists(path("sw/rmse_repeat_last_15.csv")));
    for (const auto& e : fs::directory_iterator(path("sw"))) EXPECT_NE(e.path().extension(), ".tmp");
}
