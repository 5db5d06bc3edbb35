#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "helpers.hpp"

using testutil::TempDir;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const TempDir& tmp, const std::string& args) {
    static int counter = 0;
    const std::string so = tmp.file(".stdout" + std::to_string(counter));
    const std::string se = tmp.file(".stderr" + std::to_string(counter));
    ++counter;
    const std::string cmd =
        std::string(BINCAL_CLI_PATH) + " " + args + " >" + so + " 2>" + se;
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(so);
    r.err = slurp(se);
    return r;
}

bool file_exists(const std::string& path) {
    return std::ifstream(path).good();
}

// One small pipeline dataset shared across the cases below.
struct Pipeline {
    TempDir tmp;
    std::string dir;

    Pipeline() : dir(tmp.file("work")) {
        RunResult r = run_cli(
            tmp, "--seed 7 --out " + dir +
                     " synthesize --grid-side 10 --design-side 5");
        REQUIRE(r.code == 0);
    }
    std::string path(const std::string& name) const { return dir + "/" + name; }
};

const Pipeline& pipeline() {
    static Pipeline p;
    return p;
}

}  // namespace

TEST_CASE("missing subcommand and bad flags exit nonzero with an error line") {
    TempDir tmp;
    RunResult none = run_cli(tmp, "");
    CHECK(none.code != 0);

    RunResult bad = run_cli(tmp, "--out " + tmp.file("x") +
                                     " lpca --ensemble does_not_exist.csv");
    CHECK(bad.code != 0);
    CHECK(bad.err.rfind("error:", 0) == 0);
    // single line, machine parseable
    CHECK(bad.err.find('\n') == bad.err.size() - 1);
}

TEST_CASE("synthesize writes the dataset and reports its shape") {
    const Pipeline& p = pipeline();
    for (const char* f :
         {"design.csv", "design.meta.json", "ensemble.csv",
          "ensemble.grid.json", "observation.csv", "truth_output.csv",
          "true_discrepancy.csv", "synthesize.config.json"})
        CHECK(file_exists(p.path(f)));

    RunResult again = run_cli(p.tmp, "--seed 7 --out " + p.tmp.file("rerun") +
                                         " synthesize --grid-side 10"
                                         " --design-side 5");
    REQUIRE(again.code == 0);
    CHECK(again.out.find("synthetic ensemble: 25 runs x 100 cells") !=
          std::string::npos);
    // byte-identical rerun under the same seed
    CHECK(slurp(p.tmp.file("rerun") + "/ensemble.csv") ==
          slurp(p.path("ensemble.csv")));
    CHECK(slurp(p.tmp.file("rerun") + "/observation.csv") ==
          slurp(p.path("observation.csv")));

    RunResult other = run_cli(p.tmp, "--seed 8 --out " + p.tmp.file("other") +
                                         " synthesize --grid-side 10"
                                         " --design-side 5");
    REQUIRE(other.code == 0);
    CHECK(slurp(p.tmp.file("other") + "/observation.csv") !=
          slurp(p.path("observation.csv")));

    RunResult bad = run_cli(p.tmp, "synthesize --truth 0.4");
    CHECK(bad.code != 0);
    CHECK(bad.err.rfind("error:", 0) == 0);
}

TEST_CASE("lpca artifact records a non-increasing deviance trace") {
    const Pipeline& p = pipeline();
    RunResult r = run_cli(p.tmp, "--seed 1 --out " + p.dir +
                                     " lpca --ensemble " +
                                     p.path("ensemble.csv") +
                                     " --components 3");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("logistic PCA: J_y=3") != std::string::npos);
    REQUIRE(file_exists(p.path("lpca.json")));

    std::ifstream in(p.path("lpca.json"));
    nlohmann::json j;
    in >> j;
    const auto trace = j["deviance_trace"].get<std::vector<double>>();
    REQUIRE(trace.size() >= 2);
    for (size_t i = 1; i < trace.size(); ++i)
        CHECK(trace[i] <= trace[i - 1] + 1e-9);

    RunResult bad = run_cli(p.tmp, "--out " + p.dir + " lpca --ensemble " +
                                       p.path("ensemble.csv") +
                                       " --components 0");
    CHECK(bad.code != 0);
    CHECK(bad.err.rfind("error:", 0) == 0);
}

TEST_CASE("emulate reports per-component hyperparameters") {
    const Pipeline& p = pipeline();
    RunResult r = run_cli(p.tmp, "--seed 1 --out " + p.dir +
                                     " emulate --lpca " + p.path("lpca.json") +
                                     " --design " + p.path("design.csv"));
    REQUIRE(r.code == 0);
    CHECK(file_exists(p.path("emulator.json")));
    CHECK(r.out.find("pc 1:") != std::string::npos);
    CHECK(r.out.find("pc 3:") != std::string::npos);
    CHECK(r.out.find("zeta=") != std::string::npos);
}

TEST_CASE("cv validates the fold fraction and emits a report") {
    const Pipeline& p = pipeline();
    RunResult bad = run_cli(p.tmp, "--out " + p.dir + " cv --ensemble " +
                                       p.path("ensemble.csv") +
                                       " --components 2 --folds 0.6");
    CHECK(bad.code != 0);
    CHECK(bad.err.rfind("error:", 0) == 0);

    RunResult r = run_cli(p.tmp, "--seed 1 --threads 2 --out " + p.dir +
                                     " cv --ensemble " +
                                     p.path("ensemble.csv") +
                                     " --components 2 --folds 0.25"
                                     " --restarts 2 --max-evals 120");
    REQUIRE(r.code == 0);
    CHECK(file_exists(p.path("cv_report.csv")));
    CHECK(r.out.find("cv overall misclassification rate:") != std::string::npos);
}

TEST_CASE("calibrate runs reproducible parallel chains") {
    const Pipeline& p = pipeline();
    const std::string common =
        " calibrate --ensemble " + p.path("ensemble.csv") + " --lpca " +
        p.path("lpca.json") + " --emulator " + p.path("emulator.json") +
        " --observation " + p.path("observation.csv") +
        " --iterations 3000 --burn-in 500 --thin 5 --chains 2"
        " --grid-points 16";
    RunResult r = run_cli(p.tmp, "--seed 5 --threads 2 --out " + p.dir + common);
    REQUIRE(r.code == 0);
    // reduced-model parameter count: J_y=3 score loadings + d=2 inputs
    // + discrepancy coefficient and variance
    CHECK(r.out.find("reduced model estimates J_y + d + 2 = 7 parameters") !=
          std::string::npos);
    for (const char* f :
         {"discrepancy_basis.csv", "chain_1.csv", "chain_2.csv",
          "diagnostics_1.json", "diagnostics_2.json", "diagnostics.json",
          "density_theta1_theta2.csv", "calibrate.config.json"})
        CHECK(file_exists(p.path(f)));
    CHECK(slurp(p.path("chain_1.csv")) != slurp(p.path("chain_2.csv")));

    RunResult again =
        run_cli(p.tmp, "--seed 5 --threads 1 --out " + p.tmp.file("cal2") + common);
    REQUIRE(again.code == 0);
    CHECK(slurp(p.tmp.file("cal2") + "/chain_1.csv") ==
          slurp(p.path("chain_1.csv")));
    CHECK(slurp(p.tmp.file("cal2") + "/chain_2.csv") ==
          slurp(p.path("chain_2.csv")));

    nlohmann::json merged;
    std::ifstream in(p.path("diagnostics.json"));
    in >> merged;
    CHECK(merged["chains"] == 2);
    CHECK(merged["per_chain"].size() == 2);
}

TEST_CASE("project summarizes the chain and an uncalibrated baseline") {
    const Pipeline& p = pipeline();
    RunResult bad = run_cli(p.tmp, "--out " + p.dir + " project --chain " +
                                       p.path("chain_1.csv") + " --design " +
                                       p.path("design.csv") + " --mode bogus");
    CHECK(bad.code != 0);
    CHECK(bad.err.rfind("error:", 0) == 0);

    RunResult r = run_cli(p.tmp, "--seed 2 --out " + p.dir +
                                     " project --chain " +
                                     p.path("chain_1.csv") + " --design " +
                                     p.path("design.csv") +
                                     " --mode mean --baseline 500");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("scalar GP: mean=") != std::string::npos);
    for (const char* f :
         {"projection_samples.csv", "projection_summary.json",
          "baseline_samples.csv", "baseline_summary.json",
          "project.config.json"})
        CHECK(file_exists(p.path(f)));

    nlohmann::json proj, base;
    std::ifstream pin(p.path("projection_summary.json")),
        bin(p.path("baseline_summary.json"));
    pin >> proj;
    bin >> base;
    CHECK(proj["mode"] == "mean-plug-in");
    CHECK(proj["p2_5"].get<double>() <= proj["p50"].get<double>());
    CHECK(proj["p50"].get<double>() <= proj["p97_5"].get<double>());
    CHECK(base["samples"] == 500);
}

TEST_CASE("diagnose pools chains into merged diagnostics and densities") {
    const Pipeline& p = pipeline();
    const std::string out = p.tmp.file("diag");
    RunResult r = run_cli(p.tmp, "--out " + out + " diagnose --chain " +
                                     p.path("chain_1.csv") + " --chain " +
                                     p.path("chain_2.csv") +
                                     " --grid-points 16");
    REQUIRE(r.code == 0);
    for (const char* f :
         {"diagnostics_1.json", "diagnostics_2.json", "diagnostics.json",
          "density_theta1_theta2.csv", "diagnose.config.json"})
        CHECK(file_exists(out + "/" + f));

    RunResult none = run_cli(p.tmp, "--out " + out + " diagnose");
    CHECK(none.code != 0);
    CHECK(none.err.rfind("error:", 0) == 0);
}

TEST_CASE("artifacts embed the producing configuration") {
    const Pipeline& p = pipeline();
    nlohmann::json cfg;
    std::ifstream in(p.path("synthesize.config.json"));
    in >> cfg;
    CHECK(cfg["command"] == "synthesize");
    CHECK(cfg["seed"] == 7);
    CHECK(cfg["grid_side"] == 10);
    CHECK(cfg["design_side"] == 5);
}
