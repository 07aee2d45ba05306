#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "boilerctl/qp_problem.hpp"
#include "boilerctl/run_config.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& capture = {}) {
    std::string cmd = std::string(BOILERCTL_CLI_PATH) + " " + args;
    if (!capture.empty()) cmd += " > " + capture.string() + " 2>&1";
    else cmd += " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

// small enough for quick end-to-end runs
std::string tiny_config(const fs::path& out_dir) {
    return "[run]\n"
           "seed = 101\n"
           "output_dir = " + out_dir.string() + "\n"
           "[plant]\n"
           "steps = 700\n"
           "[layout]\n"
           "data_type = B\n"
           "lag_depth = 0\n"
           "[svr]\n"
           "max_passes = 2000\n"
           "[loop]\n"
           "horizon = 25\n"
           "warmup = 20\n"
           "[sweep]\n"
           "sizes = 1,5,20\n"
           "[bench]\n"
           "problems = 3\n"
           "algorithms = DE\n"
           "max_evals = 4000\n"
           "time_budget_s = 0\n";
}

}  // namespace

TEST_CASE("generate, train, simulate pipeline completes") {
    testutil::TempDir tmp("cli_e2e");
    const fs::path out = tmp.path() / "run";
    const fs::path cfg = tmp.path() / "run.cfg";
    testutil::write_text(cfg, tiny_config(out));

    CHECK(run_cli("--config " + cfg.string() + " generate") == 0);
    CHECK(fs::exists(out / "dataset.csv"));
    CHECK(fs::exists(out / "dataset_report.json"));
    CHECK(fs::exists(out / "manifest_generate.json"));

    CHECK(run_cli("--config " + cfg.string() + " train") == 0);
    CHECK(fs::exists(out / "bundle.json"));
    CHECK(fs::exists(out / "accuracy_report.json"));

    CHECK(run_cli("--config " + cfg.string() + " sweep-compensation") == 0);
    CHECK(fs::exists(out / "compensation_sweep.csv"));

    CHECK(run_cli("--config " + cfg.string() + " simulate") == 0);
    CHECK(fs::exists(out / "loop_report.csv"));
    CHECK(fs::exists(out / "loop_summary.json"));
    CHECK(fs::exists(out / "baseline_log.csv"));
    CHECK(fs::exists(out / "loop_timing.csv"));

    CHECK(run_cli("--config " + cfg.string() + " bench-optimizers") == 0);
    CHECK(fs::exists(out / "bench_objectives.json"));
    CHECK(fs::exists(out / "bench_table_timing.txt"));
}

TEST_CASE("qp-solve prints the solution for the shipped trivial problem") {
    testutil::TempDir tmp("cli_qp");
    const fs::path shipped = fs::path(BOILERCTL_DATA_DIR) / "trivial_identity.qp";
    REQUIRE(fs::exists(shipped));
    const boilerctl::QpProblem p = boilerctl::read_qp_file(shipped);
    CHECK(p.n() == 3);
    const fs::path out = tmp.path() / "solution.json";
    CHECK(run_cli("qp-solve " + shipped.string(), out) == 0);
    const std::string text = testutil::read_text(out);
    CHECK(text.find("\"status\": \"Optimal\"") != std::string::npos);
    CHECK(text.find("\"objective\": 0.0") != std::string::npos);
    // the minimizer of the identity bowl is the origin
    CHECK(text.find("0.0,") != std::string::npos);

    SUBCASE("the shipped default config parses and validates") {
        const fs::path cfg = fs::path(BOILERCTL_DATA_DIR) / ".." / "configs" / "default.cfg";
        REQUIRE(fs::exists(cfg));
        CHECK_NOTHROW(boilerctl::parse_config_file(cfg));
    }
}

TEST_CASE("exit codes distinguish the failure classes") {
    testutil::TempDir tmp("cli_err");

    SUBCASE("unknown config key") {
        const fs::path cfg = tmp.path() / "bad.cfg";
        testutil::write_text(cfg, "[plant]\nsteeps = 100\n");
        CHECK(run_cli("--config " + cfg.string() + " generate") == 2);
    }

    SUBCASE("unknown section") {
        const fs::path cfg = tmp.path() / "bad2.cfg";
        testutil::write_text(cfg, "[plantt]\nsteps = 100\n");
        CHECK(run_cli("--config " + cfg.string() + " generate") == 2);
    }

    SUBCASE("missing data file") {
        const fs::path out = tmp.path() / "run";
        const fs::path cfg = tmp.path() / "ok.cfg";
        testutil::write_text(cfg, tiny_config(out));
        CHECK(run_cli("--config " + cfg.string() + " train --data /nonexistent.csv") == 3);
    }

    SUBCASE("malformed qp file") {
        const fs::path qp = tmp.path() / "bad.qp";
        testutil::write_text(qp, "not a qp file\n");
        CHECK(run_cli("qp-solve " + qp.string()) == 3);
    }
}

TEST_CASE("rerunning generate is byte-identical") {
    testutil::TempDir tmp("cli_det");
    const fs::path out1 = tmp.path() / "a";
    const fs::path out2 = tmp.path() / "b";
    const fs::path cfg1 = tmp.path() / "a.cfg";
    const fs::path cfg2 = tmp.path() / "b.cfg";
    testutil::write_text(cfg1, tiny_config(out1));
    testutil::write_text(cfg2, tiny_config(out2));
    REQUIRE(run_cli("--config " + cfg1.string() + " generate") == 0);
    REQUIRE(run_cli("--config " + cfg2.string() + " generate") == 0);
    CHECK(testutil::read_text(out1 / "dataset.csv") == testutil::read_text(out2 / "dataset.csv"));
}
