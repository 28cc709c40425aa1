#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "confaudit/cli.hpp"
#include "test_support.hpp"

using namespace confaudit;
using confaudit::testing::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

const char* kSweepIni = R"([run]
seed = 77

[cohort]
profile = csmc_like
n_patients = 30000

[sweep]
subset_size = 2000
eval_subset_size = 800
repeats = 1

[learner]
epochs = 10

[bootstrap]
n_bootstrap = 100
)";

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "confaudit");
    std::ostringstream out, err;
    const int code = run_command(args, out, err);
    return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
    const int status = std::system((std::string(CONFAUDIT_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, SweepWritesJsonAndCsv) {
    TempDir dir;
    spit(dir / "sweep.ini", kSweepIni);
    const auto r = run({"sweep", "--config", dir / "sweep.ini", "--out", dir / "results"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "results/sweep.json"));
    EXPECT_EQ(j.at("points").size(), 6u);
    EXPECT_EQ(j.at("config").at("seed"), 77u);
    EXPECT_EQ(j.at("cohort").at("n_patients"), 30000u);
    EXPECT_FALSE(slurp(dir / "results/sweep.csv").empty());
    EXPECT_NE(r.out.find("Training Task To Predict Race"), std::string::npos);
    EXPECT_NE(r.out.find("eval_mode=matched"), std::string::npos);

    // Re-parsing reproduces the result exactly.
    const auto back = j.get<SweepResult>();
    nlohmann::json again = back;
    again["cohort"] = j.at("cohort");
    EXPECT_EQ(again.dump(2), j.dump(2));

    const auto prov = nlohmann::json::parse(slurp(dir / "results/sweep.provenance.json"));
    EXPECT_TRUE(prov.contains("finished_utc"));
    EXPECT_FALSE(j.contains("finished_utc"));
}

TEST(Cli, RerunIsByteIdentical) {
    TempDir dir;
    spit(dir / "sweep.ini", kSweepIni);
    const std::vector<std::string> base{"--config", dir / "sweep.ini", "--seed", "5"};
    for (const std::string cmd : {"gen", "sweep", "baseline"}) {
        std::vector<std::string> a{cmd}, b{cmd};
        a.insert(a.end(), base.begin(), base.end());
        b.insert(b.end(), base.begin(), base.end());
        a.insert(a.end(), {"--out", dir / "a"});
        b.insert(b.end(), {"--out", dir / "b"});
        ASSERT_EQ(run(a).code, 0) << cmd;
        ASSERT_EQ(run(b).code, 0) << cmd;
        const std::string name = cmd == "gen" ? "gen.json" : cmd + ".json";
        EXPECT_EQ(slurp(dir / ("a/" + name)), slurp(dir / ("b/" + name))) << cmd;
    }
    EXPECT_EQ(slurp(dir / "a/cohort.csv"), slurp(dir / "b/cohort.csv"));
}

TEST(Cli, FlagsOverrideConfig) {
    TempDir dir;
    CommandLine cl;
    cl.command = "sweep";
    spit(dir / "c.ini", kSweepIni);
    cl.config_path = dir / "c.ini";
    cl.seed = 123;
    cl.eval_mode = "natural";
    const auto rc = resolve_run_config(cl);
    EXPECT_EQ(rc.seed, 123u);
    EXPECT_EQ(rc.sweep.seed, 123u);
    EXPECT_EQ(rc.sweep.eval_mode, EvalMode::NaturalTest);
    EXPECT_EQ(rc.sweep.subset_size, 2000u);
    EXPECT_EQ(rc.sweep.learner.epochs, 10u);
}

TEST(Cli, UnknownKeyNamed) {
    TempDir dir;
    spit(dir / "bad.ini", "[run]\nseed = 1\n[sweep]\nbiaz_grid = 0.5, 1.0\n");
    const auto r = run({"sweep", "--config", dir / "bad.ini", "--out", dir / "o"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("biaz_grid"), std::string::npos) << r.err;
}

TEST(Cli, BadValueNamesKey) {
    TempDir dir;
    spit(dir / "bad.ini", "[run]\nseed = 1\n[sweep]\nbias_grid = 0.5, 1.5\n");
    const auto r = run({"sweep", "--config", dir / "bad.ini"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("bias_grid"), std::string::npos) << r.err;
}

TEST(Cli, MissingSeedIsConfigError) {
    TempDir dir;
    const auto r = run({"gen", "--out", dir / "o"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("seed"), std::string::npos);
}

TEST(Cli, MissingPathIsConfigError) {
    const auto r = run({"sweep", "--config", "/nonexistent/x.ini"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("config"), std::string::npos);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({"frobnicate"}).code, 2);
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"sweep", "--bogus"}).code, 2);
    EXPECT_EQ(run({"sweep", "--eval-mode", "sideways"}).code, 2);
    const auto r = run({"frobnicate"});
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, BinaryExitCodes) {
    EXPECT_EQ(run_binary("frobnicate"), 2);
    EXPECT_EQ(run_binary("gen --out /tmp/confaudit_cli_noseed"), 1);
    EXPECT_EQ(run_binary("--help"), 0);
}

TEST(Cli, InsufficientCohortIsDomainError) {
    TempDir dir;
    spit(dir / "small.ini", "[run]\nseed = 3\n[cohort]\nn_patients = 2000\n[sweep]\nsubset_size = 2000\n");
    const auto r = run({"sweep", "--config", dir / "small.ini", "--out", dir / "o"});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("bias"), std::string::npos) << r.err;
}

TEST(Cli, SplitAndGenArtifacts) {
    TempDir dir;
    spit(dir / "c.ini", "[run]\nseed = 4\n[cohort]\nn_patients = 500\n");
    ASSERT_EQ(run({"gen", "--config", dir / "c.ini", "--out", dir / "g"}).code, 0);
    const Cohort c = load_cohort(dir / "g/cohort.csv");
    EXPECT_EQ(summarize_demographics(c).by_patient.n, 500u);
    const auto gen = nlohmann::json::parse(slurp(dir / "g/gen.json"));
    EXPECT_EQ(gen.at("config").at("seed"), 4u);

    spit(dir / "s.ini", "[run]\nseed = 4\n[cohort]\ncsv = " + (dir / "g/cohort.csv") + "\n");
    ASSERT_EQ(run({"split", "--config", dir / "s.ini", "--out", dir / "s"}).code, 0);
    const auto split = nlohmann::json::parse(slurp(dir / "s/split.json"));
    std::size_t patients = 0;
    for (const auto& [k, v] : split.at("partitions").items()) patients += v.at("patients").get<std::size_t>();
    EXPECT_EQ(patients, 500u);
    EXPECT_FALSE(slurp(dir / "s/split.csv").empty());
}

TEST(Cli, ReportFromResultFiles) {
    TempDir dir;
    spit(dir / "sweep.ini", std::string(kSweepIni) + "[transfer]\ntrain_patients = 6000\ntest_patients = 3000\n");
    ASSERT_EQ(run({"sweep", "--config", dir / "sweep.ini", "--out", dir / "r"}).code, 0);
    ASSERT_EQ(run({"transfer", "--config", dir / "sweep.ini", "--out", dir / "r"}).code, 0);
    ASSERT_EQ(run({"gen", "--config", dir / "sweep.ini", "--out", dir / "r"}).code, 0);
    const auto r = run({"report", dir / "r/sweep.json", dir / "r/transfer.json", dir / "r/cohort.csv", "--out",
                        dir / "rep"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("Demographic characteristics"), std::string::npos);
    EXPECT_NE(r.out.find("Proportion Biased"), std::string::npos);
    EXPECT_NE(r.out.find("Transfer (sex:M)"), std::string::npos);
    EXPECT_EQ(slurp(dir / "rep/report.txt"), r.out);

    EXPECT_EQ(run({"report", "--out", dir / "rep2"}).code, 1);
}
