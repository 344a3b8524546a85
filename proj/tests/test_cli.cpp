#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "commands.hpp"

using namespace onelap;
using namespace onelap::app;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("onelap_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& path)
{
    std::ifstream is(path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json read_json(const fs::path& path)
{
    std::ifstream is(path);
    return json::parse(is);
}

int run(const std::string& command, const RunConfig& c, std::string* err = nullptr)
{
    std::ostringstream log;
    std::ostringstream errors;
    const int code = run_command(command, c, log, errors);
    if (err != nullptr) {
        *err = errors.str();
    }
    return code;
}

std::vector<std::string> csv_rows(const fs::path& path)
{
    std::istringstream is(slurp(path));
    std::vector<std::string> rows;
    for (std::string line; std::getline(is, line);) {
        rows.push_back(line);
    }
    return rows;
}

double csv_column(const std::string& row, int column)
{
    std::istringstream is(row);
    std::string cell;
    for (int i = 0; i <= column; ++i) {
        std::getline(is, cell, ',');
    }
    return std::stod(cell);
}

int run_binary(const std::string& args)
{
    const std::string cmd = std::string(ONELAP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST(RunConfig, JsonRoundTrip)
{
    RunConfig c;
    c.domain = DomainTag::rect(2.0, 0.5);
    c.nx = 3;
    c.source.q = 0.25;
    c.schedule.values = {1.3, 1.2};
    c.mountain_pass.eps_schedule = {1e-3, 1e-7};
    c.mountain_pass.step_rule.shrink = 0.25;
    c.certify.refinements = {1, 2};
    c.seed = 42;
    const auto j = to_json(c);
    const RunConfig back = merge_json(RunConfig{}, json::parse(j.dump()));
    EXPECT_EQ(to_json(back).dump(), j.dump());
}

TEST(RunConfig, RejectsUnknownKeysAndKinds)
{
    EXPECT_THROW(merge_json({}, json::parse(R"({"refinment": 3})")), ConfigError);
    EXPECT_THROW(merge_json({}, json::parse(R"({"source": {"kind": "cubic"}})")), ConfigError);
    EXPECT_THROW(merge_json({}, json::parse(R"({"domain": {"kind": "annulus"}})")), ConfigError);
    EXPECT_THROW(merge_json({}, json::parse(R"({"p": "one"})")), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/onelap.json", {}), IoError);
}

TEST(RunConfig, HypothesisFailureIsNamed)
{
    RunConfig c;
    c.source.kappa = 2.0;
    try {
        validate_solve(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("hypothesis (iii)"), std::string::npos) << e.what();
    }
    c = {};
    c.source = SourceSpec::power(1.5);
    try {
        validate_solve(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("subcriticality"), std::string::npos) << e.what();
    }
}

TEST(RunConfig, BenchmarkDefaults)
{
    const RunConfig c = RunConfig::benchmark_defaults();
    EXPECT_NO_THROW(validate_solve(c));
    RunConfig wrong = c;
    wrong.p = 1.5;
    EXPECT_THROW(validate_solve(wrong), ConfigError);
}

TEST(CmdMesh, DiskAndRectCounts)
{
    RunConfig c;
    c.out_dir = scratch("mesh_disk");
    ASSERT_EQ(run("mesh", c), ok);
    const json disk = read_json(fs::path(c.out_dir) / "mesh_report.json");
    EXPECT_EQ(disk["triangles"], 96);
    EXPECT_TRUE(disk["violations"].empty());
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "mesh.txt"));

    c.domain = DomainTag::rect(1.0, 1.0);
    c.nx = 4;
    c.ny = 4;
    c.out_dir = scratch("mesh_rect");
    ASSERT_EQ(run("mesh", c), ok);
    EXPECT_EQ(read_json(fs::path(c.out_dir) / "mesh_report.json")["triangles"], 32);
}

TEST(CmdMesh, NegativeRefinementRejected)
{
    RunConfig c;
    c.refinement = -1;
    c.out_dir = scratch("mesh_neg");
    EXPECT_EQ(run("mesh", c), config_error);
    EXPECT_FALSE(fs::exists(c.out_dir));
    EXPECT_EQ(run_binary("mesh --refinement -1 --out " + scratch("mesh_neg_bin").string()), config_error);
}

TEST(CmdSolve, ExponentOutsideRangeIsConfigError)
{
    RunConfig c;
    c.p = 1.45;
    c.out_dir = scratch("solve_range");
    std::string err;
    EXPECT_EQ(run("solve", c, &err), config_error);
    EXPECT_NE(err.find("outside"), std::string::npos);
    c.p = 2.0;
    EXPECT_EQ(run("solve", c), config_error);
}

TEST(CmdSolve, RepeatedRunsAreIdentical)
{
    RunConfig c;
    c.out_dir = scratch("solve_a");
    ASSERT_EQ(run("solve", c), ok);
    RunConfig d = c;
    d.out_dir = scratch("solve_b");
    ASSERT_EQ(run("solve", d), ok);
    for (const char* name : {"iterations.csv", "w.txt"}) {
        EXPECT_EQ(slurp(fs::path(c.out_dir) / name), slurp(fs::path(d.out_dir) / name)) << name;
    }
    json a = read_json(fs::path(c.out_dir) / "summary.json");
    json b = read_json(fs::path(d.out_dir) / "summary.json");
    EXPECT_EQ(a["config"]["p"], 1.3);
    a["config"].erase("out_dir");
    b["config"].erase("out_dir");
    EXPECT_EQ(a, b);
    EXPECT_EQ(a["status"], "converged");
    EXPECT_EQ(slurp(fs::path(c.out_dir) / "iterations.csv").substr(0, 4), "iter");
}

TEST(CmdSolve, BudgetExhaustionIsDivergence)
{
    RunConfig c;
    c.mountain_pass.max_iters = 3;
    c.out_dir = scratch("solve_budget");
    EXPECT_EQ(run("solve", c), diverged);
    EXPECT_EQ(read_json(fs::path(c.out_dir) / "summary.json")["status"], "diverged");
}

TEST(CmdSolve, BenchmarkReportsOracleComparison)
{
    RunConfig c = RunConfig::benchmark_defaults();
    c.refinement = 2;
    c.out_dir = scratch("solve_bench");
    ASSERT_EQ(run("solve", c), ok);
    const json b = read_json(fs::path(c.out_dir) / "summary.json")["benchmark"];
    for (const char* key : {"u0", "u0_oracle", "u0_rel_error", "energy", "energy_oracle", "energy_rel_error"}) {
        EXPECT_TRUE(b.contains(key)) << key;
    }
    EXPECT_NEAR(b["u0"].get<double>() / b["u0_oracle"].get<double>(), 1.0, 0.01);
}

TEST(CmdContinue, DefaultConfigGivesSevenNondecreasingRows)
{
    RunConfig c;
    c.out_dir = scratch("cont_default");
    ASSERT_EQ(run("continue", c), ok);
    const auto rows = csv_rows(fs::path(c.out_dir) / "report.csv");
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_EQ(rows[0], "p,Ip_value,grad_p_integral,grad_1_integral,linf,flux_max,pairing_defect,"
                       "boundary_sign_defect,residual,iters");
    for (std::size_t i = 2; i < rows.size(); ++i) {
        // schedule decreases, so Ip must not increase down the file
        EXPECT_LE(csv_column(rows[i], 1), csv_column(rows[i - 1], 1) * (1.0 + 1e-6));
    }
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "w_final.txt"));
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "z_final.txt"));
    const json j = read_json(fs::path(c.out_dir) / "report.json");
    EXPECT_TRUE(j["complete"].get<bool>());
    EXPECT_EQ(j["steps"].size(), 7u);
    EXPECT_TRUE(j.contains("surrogate_thresholds"));
}

TEST(CmdContinue, SingleStepAndDumps)
{
    RunConfig c;
    c.schedule.steps = 1;
    c.dump_fields = true;
    c.out_dir = scratch("cont_one");
    ASSERT_EQ(run("continue", c), ok);
    EXPECT_EQ(csv_rows(fs::path(c.out_dir) / "report.csv").size(), 2u);
    EXPECT_TRUE(fs::exists(fs::path(c.out_dir) / "w_step0.txt"));
}

TEST(CmdContinue, ScheduleAbovePTildeRejected)
{
    RunConfig c;
    c.schedule.p0 = 1.45;
    c.out_dir = scratch("cont_bad");
    EXPECT_EQ(run("continue", c), config_error);
    c.schedule = {};
    c.schedule.values = {1.3, 1.3};
    EXPECT_EQ(run("continue", c), config_error);
}

TEST(CmdContinue, StepFailureWritesPartialReport)
{
    RunConfig c;
    c.mountain_pass.max_iters = 5;
    c.out_dir = scratch("cont_partial");
    EXPECT_EQ(run("continue", c), diverged);
    const json j = read_json(fs::path(c.out_dir) / "report.json");
    EXPECT_FALSE(j["complete"].get<bool>());
    EXPECT_NE(j["failure"].get<std::string>().find("p ="), std::string::npos);
    EXPECT_EQ(csv_rows(fs::path(c.out_dir) / "report.csv").size(), 1u);
}

TEST(CmdCertify, ConstantSolution)
{
    RunConfig c;
    c.out_dir = scratch("cert_const");
    ASSERT_EQ(run("certify", c), ok);
    const json j = read_json(fs::path(c.out_dir) / "certify.json");
    EXPECT_LE(std::abs(j["pohozaev"]["residual"].get<double>()), 1e-12);
    EXPECT_EQ(j["weak_residual"].size(), 3u);
    EXPECT_EQ(j["config"]["certify"]["kind"], "constant");
}

TEST(CmdCertify, SupercriticalResidualDecreases)
{
    RunConfig c;
    c.certify.kind = "supercritical_plain";
    c.certify.q = 2.0;
    c.out_dir = scratch("cert_super");
    ASSERT_EQ(run("certify", c), ok);
    const json j = read_json(fs::path(c.out_dir) / "certify.json");
    EXPECT_TRUE(j["weak_residual_decreasing"].get<bool>());
    const auto& levels = j["weak_residual"];
    for (std::size_t i = 1; i < levels.size(); ++i) {
        EXPECT_LE(levels[i]["weak_residual"].get<double>(), 1.1 * levels[i - 1]["weak_residual"].get<double>());
    }
}

TEST(CmdCertify, SubcriticalSupercriticalRejected)
{
    RunConfig c;
    c.certify.kind = "supercritical_plain";
    c.certify.q = 0.5;
    c.out_dir = scratch("cert_reject");
    std::string err;
    EXPECT_EQ(run("certify", c, &err), config_error);
    EXPECT_NE(err.find("q > 1/(N-1)"), std::string::npos) << err;
}

TEST(CmdCertify, DumpedFields)
{
    RunConfig c;
    c.out_dir = scratch("cert_field_solve");
    ASSERT_EQ(run("solve", c), ok);
    RunConfig d;
    d.certify.kind = "field";
    d.certify.mesh_path = (fs::path(c.out_dir) / "mesh.txt").string();
    d.certify.field_path = (fs::path(c.out_dir) / "w.txt").string();
    d.certify.p = 1.3;
    d.out_dir = scratch("cert_field");
    ASSERT_EQ(run("certify", d), ok);
    const json j = read_json(fs::path(d.out_dir) / "certify.json");
    EXPECT_TRUE(j["pohozaev_indicative_only"].get<bool>());
    EXPECT_TRUE(j.contains("weak_residual"));

    d.certify.field_path = "/nonexistent/w.txt";
    EXPECT_EQ(run("certify", d), io_error);
}

TEST(Binary, ExitCodes)
{
    const std::string out = scratch("bin").string();
    EXPECT_EQ(run_binary("mesh --out " + out), ok);
    EXPECT_EQ(run_binary("solve --p 1.5 --out " + out), config_error);
    EXPECT_EQ(run_binary("solve --config /nonexistent/c.json --out " + out), io_error);
    EXPECT_EQ(run_binary("certify --kind supercritical_plain --q 0.5 --out " + out), config_error);
    EXPECT_EQ(run_binary("solve --max-iters 3 --out " + out), diverged);
    EXPECT_EQ(run_binary("frobnicate"), config_error);
}
