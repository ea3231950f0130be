#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mfpart/mfpart.hpp"

using namespace mfpart;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("mfpart_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(const std::string& args, const std::string& env = "") const {
        const std::string cmd = env + " " + MFPART_BIN + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                                (dir_ / "stderr").string();
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    fs::path p(const std::string& name) const { return dir_ / name; }
    std::string q(const std::string& name) const { return "'" + p(name).string() + "'"; }
    std::string stderr_text() const { return read_file_bytes(dir_ / "stderr"); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, SynthAnalyzeExport) {
    ASSERT_EQ(run("synth cascade --p 0.4 --depth 12 --mode det --out " + q("c.bin")), 0);
    EXPECT_EQ(read_volatility_file(p("c.bin")).values, generate_cascade({0.4, 12, CascadeMode::deterministic, 0}));

    ASSERT_EQ(run("analyze --vol " + q("c.bin") + " --out " + q("a.json")), 0) << stderr_text();
    const json doc = read_json_file(p("a.json"));
    EXPECT_EQ(doc["kind"], "analysis");
    EXPECT_EQ(doc["version"], kToolkitVersion);
    EXPECT_EQ(doc["config"]["qmin"], -3.0);
    EXPECT_EQ(doc["config"]["qstep"], 0.2);
    EXPECT_EQ(doc["config"]["min_scales"], 5);
    EXPECT_EQ(doc["config"]["jump_threshold"], 5.0);
    EXPECT_EQ(doc["instrument_id"], "c");
    EXPECT_NEAR(doc["tau"][25].get<double>(), pmodel_tau(0.4, 2.0), 0.02);

    ASSERT_EQ(run("export --in " + q("a.json") + " --kind f_vs_alpha --out " + q("f.csv")), 0);
    EXPECT_EQ(read_file_bytes(p("f.csv")).substr(0, 8), "alpha,f\n");
    EXPECT_EQ(run("export --in " + q("a.json") + " --kind pie --out " + q("x.csv")), 2);
}

TEST_F(Cli, ConfigEchoReproduces) {
    ASSERT_EQ(run("synth cascade --p 0.3 --depth 11 --mode rand --seed 4 --out " + q("c.csv")), 0);
    ASSERT_EQ(run("analyze --vol " + q("c.csv") + " --qmin -2 --qmax 3 --qstep 0.5 --min-scales 6 "
                  "--jump-threshold 4 --out " + q("a.json")),
              0);
    const json a = read_json_file(p("a.json"));
    const json& c = a["config"];
    EXPECT_EQ(a["grid"]["q"].size(), 11u);
    const std::string rerun = "analyze --vol " + q("c.csv") + " --qmin " + std::to_string(c["qmin"].get<double>()) +
                              " --qmax " + std::to_string(c["qmax"].get<double>()) + " --qstep " +
                              std::to_string(c["qstep"].get<double>()) + " --min-scales " +
                              std::to_string(c["min_scales"].get<int>()) + " --jump-threshold " +
                              std::to_string(c["jump_threshold"].get<double>()) + " --out " + q("b.json");
    ASSERT_EQ(run(rerun), 0);
    EXPECT_EQ(read_file_bytes(p("a.json")), read_file_bytes(p("b.json")));
}

TEST_F(Cli, JobsDoNotChangeOutputs) {
    ASSERT_EQ(run("synth cascade --p 0.4 --depth 13 --mode rand --seed 9 --out " + q("c.bin")), 0);
    for (const char* jobs : {"1", "4", "8"}) {
        ASSERT_EQ(run("analyze --vol " + q("c.bin") + " --jobs " + jobs + " --out " + q(std::string("a") + jobs)), 0);
        ASSERT_EQ(run("bootstrap --vol " + q("c.bin") + " --n 12 --seed 7 --jobs " + jobs + " --out " +
                      q(std::string("b") + jobs)),
                  0);
    }
    ASSERT_EQ(run("analyze --vol " + q("c.bin") + " --out " + q("a_env"), "MFPART_JOBS=4"), 0);
    EXPECT_EQ(read_file_bytes(p("a1")), read_file_bytes(p("a4")));
    EXPECT_EQ(read_file_bytes(p("a1")), read_file_bytes(p("a8")));
    EXPECT_EQ(read_file_bytes(p("a1")), read_file_bytes(p("a_env")));
    EXPECT_EQ(read_file_bytes(p("b1")), read_file_bytes(p("b4")));
    EXPECT_EQ(read_file_bytes(p("b1")), read_file_bytes(p("b8")));
    const json b = read_json_file(p("b1"));
    EXPECT_EQ(b["kind"], "bootstrap");
    EXPECT_EQ(b["delta_alpha_rnd"].size(), 12u);
    EXPECT_EQ(b["config"]["seed"], 7);
}

TEST_F(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("analyze"), 2);
    EXPECT_EQ(run("analyze --vol x --out y --qstep"), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("synth cascade --mode zigzag --out " + q("z.bin")), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, MissingInputFails) {
    EXPECT_EQ(run("analyze --vol " + q("absent.bin") + " --out " + q("a.json")), 1);
    EXPECT_NE(stderr_text().find("absent.bin"), std::string::npos);
}

TEST_F(Cli, IngestTicks) {
    std::ofstream t(p("600000.csv"));
    t << "instrument,timestamp,price\n";
    t << "600000,2005-01-04T09:20:00,10.00\n";
    t << "600000,2005-01-04T09:30:05,10.00\n";
    t << "600000,2005-01-04T09:30:40,10.10\n";
    t << "600000,2005-01-04T09:31:20,-3\n";
    t << "600000,2005-01-04T13:05:00,10.05\n";
    t << "600000,2005-01-04T13:05:30,10.00\n";
    t.close();
    ASSERT_EQ(run("ingest --ticks " + q("600000.csv") + " --calendar builtin:cn-a-share --out " + q("v.csv")), 0)
        << stderr_text();
    const auto v = read_volatility_file(p("v.csv"));
    ASSERT_EQ(v.values.size(), 240u);
    EXPECT_NEAR(v.values[0], std::log(10.10 / 10.00), 1e-12);
    EXPECT_NEAR(v.values[125], std::log(10.05 / 10.00), 1e-12);
    EXPECT_NE(stderr_text().find("1 dropped"), std::string::npos);

    std::ofstream cal(p("cal.json"));
    cal << R"({"morning": ["09:30", "11:30"], "afternoon": ["13:00", "15:00"], "trading_days": ["2005-01-04"]})";
    cal.close();
    ASSERT_EQ(run("ingest --ticks " + q("600000.csv") + " --calendar " + q("cal.json") + " --out " + q("v.bin")), 0);
    EXPECT_EQ(read_volatility_file(p("v.bin")).values, v.values);
    EXPECT_EQ(run("ingest --ticks " + q("600000.csv") + " --calendar builtin:mars --out " + q("v.bin")), 2);
}

TEST_F(Cli, PModelFileAndDirectory) {
    fs::create_directories(p("an"));
    for (int i = 0; i < 3; ++i) {
        const std::string c = "c" + std::to_string(i) + ".bin";
        ASSERT_EQ(run("synth cascade --p " + std::to_string(0.38 + 0.02 * i) + " --depth 12 --out " + q(c)), 0);
        ASSERT_EQ(run("analyze --vol " + q(c) + " --out " + q("an/c" + std::to_string(i) + ".json")), 0);
    }
    ASSERT_EQ(run("pmodel --tau " + q("an/c0.json") + " --out " + q("one.json")), 0);
    const json one = read_json_file(p("one.json"));
    EXPECT_EQ(one["kind"], "pmodel");
    EXPECT_NEAR(one["fits"][0]["p"].get<double>(), 0.38, 0.01);
    EXPECT_FALSE(one.contains("histogram"));

    ASSERT_EQ(run("pmodel --tau " + q("an") + " --out " + q("all.json")), 0);
    const json all = read_json_file(p("all.json"));
    EXPECT_EQ(all["fits"].size(), 3u);
    EXPECT_NEAR(all["histogram"]["mean_p"].get<double>(), 0.40, 0.01);
    ASSERT_EQ(run("export --in " + q("all.json") + " --kind gp_hist --out " + q("g.csv")), 0);
    EXPECT_EQ(read_file_bytes(p("g.csv")).substr(0, 4), "p,g\n");
}

TEST_F(Cli, EnsembleFromAnalysesAndSeries) {
    fs::create_directories(p("vol"));
    fs::create_directories(p("an"));
    for (int i = 0; i < 4; ++i) {
        const std::string id = "m" + std::to_string(i);
        ASSERT_EQ(run("synth cascade --mode rand --seed " + std::to_string(i) + " --p " +
                      std::to_string(0.36 + 0.02 * i) + " --depth 12 --out " + q("vol/" + id + ".bin")),
                  0);
        ASSERT_EQ(run("analyze --vol " + q("vol/" + id + ".bin") + " --out " + q("an/" + id + ".json")), 0);
    }
    ASSERT_EQ(run("ensemble --analyses " + q("an") + " --quorum 0.8 --out " + q("e1.json")), 0) << stderr_text();
    ASSERT_EQ(run("ensemble --analyses " + q("vol") + " --quorum 0.8 --out " + q("e2.json")), 0) << stderr_text();
    const json e1 = read_json_file(p("e1.json"));
    const json e2 = read_json_file(p("e2.json"));
    EXPECT_EQ(e1["kind"], "ensemble");
    EXPECT_EQ(e1["member_ids"], json({"m0", "m1", "m2", "m3"}));
    EXPECT_EQ(e1["quenched"]["spectrum"]["tau"], e2["quenched"]["spectrum"]["tau"]);
    EXPECT_EQ(e1["config"]["quorum"], 0.8);
    EXPECT_GE(e1["annealed"]["spectrum"]["delta_alpha"].get<double>(),
              e1["quenched"]["spectrum"]["delta_alpha"].get<double>());
}

TEST_F(Cli, BatchPartialFailureExitsOne) {
    fs::create_directories(p("in"));
    for (int i = 0; i < 2; ++i)
        ASSERT_EQ(run("synth cascade --mode rand --seed " + std::to_string(i) + " --depth 11 --out " +
                      q("in/s" + std::to_string(i) + ".bin")),
                  0);
    ASSERT_EQ(run("batch --dir " + q("in") + " --out " + q("out")), 0);
    std::ofstream(p("in/bad.csv")) << "not,a,known,format\n";
    EXPECT_EQ(run("batch --dir " + q("in") + " --out " + q("out2") + " --bootstrap-n 5 --seed 1"), 1);
    const json failures = read_json_file(p("out2/failures.json"));
    ASSERT_EQ(failures.size(), 1u);
    EXPECT_EQ(failures[0]["file"], "bad.csv");
    const json echo = read_json_file(p("out2/s0.analysis.json"))["config"];
    EXPECT_EQ(echo["bootstrap_n"], 5);
    EXPECT_EQ(echo["calendar"], "builtin:cn-a-share");
}
