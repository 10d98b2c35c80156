#include "flexdur/data_io.hpp"
#include "flexdur/serialize.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

using namespace flexdur;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("flexdur_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    // Runs the CLI with stdout discarded and stderr captured; returns the exit code.
    int run(const std::string& args) {
        const std::string cmd = std::string(FLEXDUR_CLI) + " " + args + " > /dev/null 2> " + (root_ / "stderr.txt").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    [[nodiscard]] std::string stderr_text() const { return slurp(root_ / "stderr.txt"); }
    [[nodiscard]] fs::path dir(const std::string& name) const { return root_ / name; }

    static std::string slurp(const fs::path& path) {
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    static Json json_file(const fs::path& path) {
        std::ifstream in(path);
        return Json::parse(in);
    }

    fs::path root_;
};

}  // namespace

TEST_F(CliTest, SimulateFigureParametersAndDeterminism) {
    const std::string args =
        "simulate --dynamics se --mu 1 --alpha 0.07 --beta 0.1 --residual gamma --kappa 0.35 -n 200000 --seed 7 --out ";
    ASSERT_EQ(run(args + dir("a").string()), 0) << stderr_text();
    ASSERT_EQ(run(args + dir("b").string()), 0) << stderr_text();
    const auto series = read_series(dir("a") / "series.csv");
    ASSERT_EQ(series.series.size(), 200000u);
    const auto& d = series.series.durations;
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
    EXPECT_NEAR(mean, 0.3, 0.05);
    EXPECT_EQ(slurp(dir("a") / "series.csv"), slurp(dir("b") / "series.csv"));

    const auto manifest = json_file(dir("a") / "manifest.json");
    EXPECT_EQ(manifest["command"], "simulate");
    EXPECT_EQ(manifest["seed"], 7);
}

TEST_F(CliTest, RequireStableRejectsExplosiveParameters) {
    EXPECT_EQ(run("simulate --dynamics se --mu 1 --alpha 0.2 --beta 0.1 --require-stable -n 10 --out " +
                  dir("x").string()),
              2);
    const auto err = Json::parse(stderr_text());
    EXPECT_EQ(err["error"], "validation");
    EXPECT_NE(err["message"].get<std::string>().find("alpha < beta"), std::string::npos);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run("simulate --no-such-flag"), 2);
    EXPECT_EQ(run("fit --data " + dir("missing.csv").string() + " --out " + dir("f").string()), 2);
    EXPECT_EQ(Json::parse(stderr_text())["error"], "format");
    EXPECT_EQ(run("simulate --dynamics nonsense -n 5 --out " + dir("y").string()), 2);
}

TEST_F(CliTest, ConfigFileHasLowerPrecedenceThanFlags) {
    std::ofstream(dir("run.cfg")) << "# simulation\nn = 25\nseed = 3\ndynamics = acd\nb0 = 0.1\na = 0.2\nb1 = 0.5\n";
    ASSERT_EQ(run("simulate --config " + dir("run.cfg").string() + " --seed 9 --out " + dir("c").string()), 0)
        << stderr_text();
    EXPECT_EQ(read_series(dir("c") / "series.csv").series.size(), 25u);
    const auto manifest = json_file(dir("c") / "manifest.json");
    EXPECT_EQ(manifest["seed"], 9);
    EXPECT_EQ(manifest["config"]["dynamics"], "acd");
}

TEST_F(CliTest, FitDiagnoseDescribe) {
    ASSERT_EQ(run("simulate --dynamics se --mu 0.5 --alpha 0.3 --beta 0.6 --residual gamma --kappa 0.8 -n 3000 "
                  "--seed 2 --burn-in 200 --out " + dir("sim").string()),
              0);
    const auto data = (dir("sim") / "series.csv").string();
    ASSERT_EQ(run("fit --data " + data + " --dynamics se --residual gamma --restarts 2 --out " + dir("fit").string()),
              0)
        << stderr_text();
    const auto fitted = json_file(dir("fit") / "fit.json");
    EXPECT_EQ(fitted["label"], "SE-Gamma");
    EXPECT_TRUE(fitted["converged"].get<bool>());

    ASSERT_EQ(run("diagnose --data " + data + " --fit " + (dir("fit") / "fit.json").string() + " --out " +
                  dir("diag").string()),
              0)
        << stderr_text();
    for (const char* f : {"pp.csv", "residuals.csv", "acf.csv", "report.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(dir("diag") / f)) << f;
    }
    const auto report = json_file(dir("diag") / "report.json");
    EXPECT_LT(report["ks"].get<double>(), 1.36 / std::sqrt(3000.0));

    ASSERT_EQ(run("describe --data " + data + " --out " + dir("desc").string()), 0);
    const auto stats = json_file(dir("desc") / "describe.json");
    std::vector<std::string> keys;
    for (const auto& [k, v] : stats.items()) keys.push_back(k);
    EXPECT_EQ(keys, (std::vector<std::string>{"count", "mean", "sd", "min", "median", "max", "skewness", "kurtosis",
                                              "overdispersion"}));
}

TEST_F(CliTest, BacktestOutputIndependentOfJobs) {
    ASSERT_EQ(run("simulate --dynamics acd --b0 0.05 --a 0.1 --b1 0.85 -n 1300 --seed 4 --burn-in 200 --out " +
                  dir("sim").string()),
              0);
    const std::string common = "backtest --data " + (dir("sim") / "series.csv").string() +
                               " --dynamics acd --residual exp --window 1000 --horizon 100 --step 50 --restarts 2";
    ASSERT_EQ(run(common + " --jobs 1 --out " + dir("j1").string()), 0) << stderr_text();
    ASSERT_EQ(run(common + " --jobs 3 --out " + dir("j3").string()), 0) << stderr_text();
    const auto a = slurp(dir("j1") / "forecasts.csv");
    EXPECT_EQ(a, slurp(dir("j3") / "forecasts.csv"));
    EXPECT_EQ(a.substr(0, a.find('\n')), "event_index,window_id,predicted,realized,latent_state");
    EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 1 + 5 * 100);
    const auto report = json_file(dir("j1") / "report.json");
    EXPECT_EQ(report["n_forecasts"], 500);
    EXPECT_TRUE(report.contains("baseline_rrmse"));
}

TEST_F(CliTest, DemoPipelineSmoke) {
    ASSERT_EQ(run("gen-demo --events 3000 --seed 11 --out " + dir("demo").string()), 0) << stderr_text();
    ASSERT_EQ(run("build-durations --events " + (dir("demo") / "events.csv").string() + " --tick 0.01 --out " +
                  dir("dur").string()),
              0)
        << stderr_text();
    EXPECT_EQ(read_series(dir("dur") / "series.csv").series.size(), 3000u);
    EXPECT_EQ(json_file(dir("dur") / "manifest.json")["config"]["durations"], 3000);
    EXPECT_EQ(run("describe --data " + (dir("dur") / "series.csv").string() + " --out " + dir("desc").string()), 0);
}

TEST_F(CliTest, BadQuoteFileNamesRow) {
    std::ofstream(dir("q.csv")) << "timestamp,best_bid,best_ask\n0,100,101\n1,102,101\n";
    EXPECT_EQ(run("build-durations --events " + dir("q.csv").string() + " --out " + dir("o").string()), 2);
    const auto err = Json::parse(stderr_text());
    EXPECT_NE(err["message"].get<std::string>().find("row 2"), std::string::npos);
}
