#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(KKPERT_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("kkpert_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Json load(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

const std::string data = KKPERT_DATA_DIR;

}  // namespace

TEST(Cli, AuditChainWritesAllConstants) {
  const auto dir = scratch("audit");
  ASSERT_EQ(run("audit-chain --gamma 0.005 --u-norm 1 --out " + (dir / "r.json").string()), 0);
  const Json r = load(dir / "r.json");
  EXPECT_EQ(r["verdict"], "PASS");
  for (const char* key : {"bound_T_minus_id", "bound_Tinv", "bound_V_minus_id", "bound_V1_inv", "bound_L_cb",
                          "bound_L_minus_id", "bound_L_defect", "eps", "final_check_1", "final_check_2"})
    EXPECT_TRUE(r["result"].contains(key)) << key;
  const double g = 0.005;
  EXPECT_NEAR(r["result"]["bound_L_defect"].get<double>(), 12 * g / ((1 - 4 * g) * (1 - 4 * g)), 1e-15);
}

TEST(Cli, AuditChainInfeasibleIsFail) {
  const auto dir = scratch("audit_fail");
  EXPECT_EQ(run("audit-chain --gamma 0.05 --u-norm 1 --out " + (dir / "r.json").string()), 2);
  EXPECT_EQ(load(dir / "r.json")["verdict"], "FAIL");
}

TEST(Cli, CheckDiagonalPasses) {
  const auto dir = scratch("diag");
  ASSERT_EQ(run("check-diagonal --problem " + data + "/m2_diagonal.json --out " + (dir / "r.json").string()), 0);
  const Json r = load(dir / "r.json");
  EXPECT_EQ(r["verdict"], "PASS");
  EXPECT_EQ(r["result"]["source"], "file");
  for (const char* key : {"tool", "version", "command", "config", "seed", "tolerances"}) EXPECT_TRUE(r.contains(key));
}

TEST(Cli, UsageAndParseErrors) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("no-such-command"), 1);
  EXPECT_EQ(run("check-diagonal --problem /nonexistent.json"), 1);
  const auto dir = scratch("bad");
  {
    std::ofstream out(dir / "bad.json");
    out << R"({"version": "kkpert.problem.v1", "ambient_dim": 2, "colour": "red"})";
  }
  EXPECT_EQ(run("check-algebra --problem " + (dir / "bad.json").string()), 1);
}

TEST(Cli, NumericFailureStillWritesReport) {
  const auto dir = scratch("numeric");
  EXPECT_EQ(run("similarity --problem " + data + "/m2_maps.json --pi1 identity --pi2 transpose --out " +
                (dir / "r.json").string()),
            2);
  const Json r = load(dir / "r.json");
  EXPECT_EQ(r["verdict"], "FAIL");
  EXPECT_EQ(r["result"]["error"], "PreconditionFailed");
}

TEST(Cli, BatchWritesReportsAndSummary) {
  const auto dir = scratch("batch");
  ASSERT_EQ(run("batch --blocks 1,1 --t 1e-4 --seeds 0..24 --out " + dir.string()), 0);
  int reports = 0;
  for (const auto& entry : fs::directory_iterator(dir))
    reports += entry.path().filename().string().rfind("report_", 0) == 0;
  EXPECT_EQ(reports, 25);
  std::ifstream csv(dir / "summary.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header.rfind("seed,gamma_analytic,u_norm_ub,S_minus_I,bound_656,verdict", 0), 0u);
  int rows = 0;
  for (std::string line; std::getline(csv, line);) rows += !line.empty();
  EXPECT_EQ(rows, 25);
  EXPECT_EQ(load(dir / "summary.json")["verdict"], "PASS");
}

TEST(Cli, ReportsAreReproducible) {
  const auto dir = scratch("repro");
  const std::string base = "pipeline --blocks 2,1 --t 1e-5 --seed 3 --out ";
  ASSERT_EQ(run(base + (dir / "a.json").string()), 0);
  ASSERT_EQ(run(base + (dir / "b.json").string()), 0);
  Json a = load(dir / "a.json"), b = load(dir / "b.json");
  a["result"].erase("timings");
  b["result"].erase("timings");
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Cli, EverySubcommandRuns) {
  const auto dir = scratch("all");
  const std::string maps = " --problem " + data + "/m2_maps.json";
  const std::string gen = " --problem " + data + "/generated_m2m1.json";
  EXPECT_EQ(run("check-algebra" + maps), 0);
  EXPECT_EQ(run("check-diagonal --canonical" + maps), 0);
  EXPECT_EQ(run("cb-norm --map transpose" + maps), 0);
  EXPECT_EQ(run("johnson --map near_identity" + maps), 0);
  EXPECT_EQ(run("similarity --pi1 identity --pi2 identity" + maps), 0);
  EXPECT_EQ(run("derivation --x x" + maps), 0);
  EXPECT_EQ(run("kk-distance" + gen), 0);
  EXPECT_EQ(run("near-inclusion --level 2" + gen), 0);
  EXPECT_EQ(run("pipeline" + gen), 0);
}
