#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lcsmt/cli/report.hpp"

using namespace lcsmt;
using lcsmt::cli::json;
namespace fs = std::filesystem;

namespace {

struct ToolRun {
  int code = -1;
  std::string out;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::path(::testing::TempDir()) / (std::string("lcsmt_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write_config(const json& j, const std::string& name = "cfg.json") const {
    const auto p = root_ / name;
    std::ofstream(p) << j.dump();
    return p;
  }

  ToolRun tool(const std::string& args, const std::string& env = "") const {
    const std::string cmd = "SOURCE_DATE_EPOCH=1700000000 CACHE_DIR='" + (root_ / "cache").string() + "' " + env +
                            " '" LCSMT_TOOL_PATH "' " + args + " 2>'" + (root_ / "stderr.txt").string() + "'";
    ToolRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
  }

  ToolRun run_cfg(const json& cfg, const std::string& extra = "") const {
    return tool("--config '" + write_config(cfg).string() + "' --out '" + out().string() + "' " + extra);
  }

  std::string stderr_text() const {
    std::ifstream in(root_ / "stderr.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json report() const {
    std::ifstream in(out() / "report.json");
    return json::parse(in);
  }

  std::string file(const std::string& name) const {
    std::ifstream in(out() / name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path out() const { return root_ / "out"; }

  fs::path root_;
};

json swap_system(const std::string& command) {
  return {{"space", {{"kind", "finite"}, {"states", 3}}},
          {"map", {{"builtin", "finite_permutation"}, {"table", {1, 0, 2}}}},
          {"factor", {{"values", {0, 4, 1}}}},
          {"command", command},
          {"params", {{"n_max", 50}}}};
}

json strict_rotation(const std::string& command, int grid = 128) {
  return {{"space", {{"kind", "circle"}, {"grid", grid}}},
          {"map", {{"builtin", "strict_rotation"}, {"angle", "golden"}}},
          {"factor", {{"generator", {{"terms", json::array({{{"freq", 1}, {"sin", 1}}})}}}}},
          {"command", command},
          {"params", {{"n_max", 400}}}};
}

json constant_rotation(const std::string& command) {
  return {{"space", {{"kind", "circle"}, {"grid", 64}}},
          {"map", {{"builtin", "rotation"}, {"angle", "golden"}}},
          {"factor", {{"constant", 0.2}}},
          {"command", command},
          {"params", {{"n_max", 100}}}};
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(Config, RejectsUnknownKeysAndMissingFields) {
  auto cfg = swap_system("analyze");
  cfg["bogus"] = 1;
  EXPECT_THROW(cli::load_config(cfg), ValidationError);
  auto no_space = swap_system("analyze");
  no_space.erase("space");
  EXPECT_THROW(cli::load_config(no_space), ValidationError);
  auto bad_cmd = swap_system("frobnicate");
  EXPECT_THROW(cli::load_config(bad_cmd), ValidationError);
  auto bad_table = swap_system("analyze");
  bad_table["map"]["table"] = {0, 0, 1};
  EXPECT_THROW(cli::load_config(bad_table), std::exception);
}

TEST(Config, RankNeedsNoSystem) {
  const auto cfg = cli::load_config(json{{"command", "rank"}, {"params", {{"generators", "1, 3/2"}}}});
  EXPECT_FALSE(cfg.system.has_value());
  ASSERT_EQ(cfg.params.generators.size(), 2u);
  EXPECT_EQ(cfg.params.generators[1], "3/2");
}

TEST(Config, KRange) {
  const auto r = cli::parse_k_range("0:1:0.25");
  const auto v = r.values();
  ASSERT_EQ(v.size(), 5u);
  EXPECT_DOUBLE_EQ(v.back(), 1.0);
  EXPECT_THROW(cli::parse_k_range("0:1"), ValidationError);
  EXPECT_THROW(cli::parse_k_range("0:1:0"), ValidationError);
  EXPECT_THROW(cli::parse_k_range("1:0:0.5"), ValidationError);
}

TEST(Config, OutIsNotPartOfTheHash) {
  auto a = swap_system("analyze");
  auto b = a;
  a["out"] = "x";
  b["out"] = "y";
  EXPECT_EQ(cli::config_hash(cli::load_config(a).raw), cli::config_hash(cli::load_config(b).raw));
  b["params"]["n_max"] = 51;
  EXPECT_NE(cli::config_hash(cli::load_config(a).raw), cli::config_hash(cli::load_config(b).raw));
}

TEST(Report, Sha256KnownVector) {
  EXPECT_EQ(cli::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_F(CliTest, AdmissibleSwapIsExact) {
  auto cfg = swap_system("admissible");
  cfg["params"]["k_range"] = "-1:3:0.5";
  const auto r = run_cfg(cfg);
  ASSERT_EQ(r.code, 0) << stderr_text();
  const auto rep = report();
  EXPECT_TRUE(rep["exact"].get<bool>());
  EXPECT_EQ(rep["payload"]["gap"], json({"1", "2"}));
  EXPECT_EQ(rep["payload"]["excluded"], json({0}));
  EXPECT_EQ(first_line(file("phase.csv")), "k,in_gap,admissible,witness_n");
  EXPECT_EQ(json::parse(r.out), rep["payload"]);
  for (const auto& kv : rep["payload"]["k_values"]) {
    const double k = kv["k"].get<double>();
    EXPECT_EQ(kv["in_gap"].get<bool>(), k >= 1.0 && k <= 2.0) << k;
    if (kv["in_gap"].get<bool>() || k == 0.0) { EXPECT_FALSE(kv["admissible"].get<bool>()); }
  }
}

TEST_F(CliTest, AnalyzeWritesTablesAndResidual) {
  const auto r = run_cfg(constant_rotation("analyze"));
  ASSERT_EQ(r.code, 0) << stderr_text();
  const auto rep = report();
  EXPECT_LE(rep["payload"]["coboundary_residual"]["max"].get<double>(), 1e-9);
  EXPECT_EQ(first_line(file("extrema.csv")), "n,min_A_n,max_A_n,inf_env_minus,sup_env_plus");
  EXPECT_EQ(first_line(file("birkhoff.csv")), "point,n,S_n,A_n,env_minus,env_plus");
  EXPECT_FALSE(rep["warnings"].empty());
  EXPECT_EQ(rep["provenance"]["version"], cli::kVersion);
  EXPECT_EQ(rep["provenance"]["timestamp"], "2023-11-14T22:13:20Z");
}

TEST_F(CliTest, ProbeStrictRotation) {
  auto cfg = strict_rotation("probe");
  cfg["params"]["k_range"] = "0:0.5:0.5";
  const auto r = run_cfg(cfg);
  ASSERT_EQ(r.code, 0) << stderr_text();
  const auto reps = report()["payload"]["reports"];
  ASSERT_EQ(reps.size(), 2u);
  EXPECT_EQ(reps[0]["verdict"], "RecurrentEvidence");
  EXPECT_EQ(reps[1]["verdict"], "EscapeCertified");
  EXPECT_EQ(first_line(file("phase.csv")), "k,verdict,witness_n,escape_bound");
  EXPECT_FALSE(fs::exists(out() / "trace.csv"));
}

TEST_F(CliTest, ProbeSingleKWritesTrace) {
  const auto r = run_cfg(strict_rotation("probe"), "--k 0.5");
  ASSERT_EQ(r.code, 0) << stderr_text();
  EXPECT_TRUE(fs::exists(out() / "trace.csv"));
}

TEST_F(CliTest, OptimizeMatchesAdmissibleOnFiniteSystems) {
  ASSERT_EQ(run_cfg(swap_system("optimize")).code, 0) << stderr_text();
  const auto opt = report()["payload"];
  EXPECT_EQ(first_line(file("potential.csv")), "node,f_minmax,f_maxmin");
  ASSERT_EQ(run_cfg(swap_system("admissible")).code, 0) << stderr_text();
  EXPECT_EQ(report()["payload"]["gap"], opt["gap"]);
  EXPECT_EQ(opt["minmax"]["value"], "2");
  EXPECT_EQ(opt["maxmin"]["value"], "1");
}

TEST_F(CliTest, ConstructStrictRotation) {
  auto cfg = strict_rotation("construct", 64);
  cfg["params"] = {{"k", 1}, {"t_samples", 101}, {"samples", 200}, {"seed", 3}};
  ASSERT_EQ(run_cfg(cfg).code, 0) << stderr_text();
  const auto mu = report()["payload"]["mu"];
  EXPECT_LE(mu["cocycle_residual"].get<double>(), 1e-7);
  EXPECT_EQ(mu["samples"], 200);
}

TEST_F(CliTest, ConstructNotFoundExitsThree) {
  auto cfg = constant_rotation("construct");
  cfg["params"] = {{"k", 0.2}, {"n_max", 20}};
  EXPECT_EQ(run_cfg(cfg).code, 3);
  const auto err = json::parse(first_line(stderr_text()));
  EXPECT_EQ(err["error"]["exit_code"], 3);
}

TEST_F(CliTest, ElasticityFromProfileAndRank) {
  json cfg{{"command", "elasticity"}, {"params", {{"profile", {-1, -1, -1}}}}};
  ASSERT_EQ(run_cfg(cfg).code, 0) << stderr_text();
  EXPECT_TRUE(report()["payload"]["punctured_line"].get<bool>());
  EXPECT_TRUE(report()["payload"]["first_kind"].get<bool>());
  ASSERT_EQ(run_cfg(json{{"command", "rank"}, {"params", {{"generators", {"1", "s"}}}}}).code, 0);
  EXPECT_EQ(report()["payload"]["rank"], 2);
}

TEST_F(CliTest, ValidationErrorsExitTwo) {
  EXPECT_EQ(tool("").code, 2);
  EXPECT_EQ(tool("--config '" + (root_ / "missing.json").string() + "'").code, 2);
  {
    std::ofstream(root_ / "bad.json") << "{ not json";
  }
  EXPECT_EQ(tool("--config '" + (root_ / "bad.json").string() + "'").code, 2);
  EXPECT_EQ(json::parse(first_line(stderr_text()))["error"]["kind"], "validation");
  auto cfg = swap_system("admissible");
  EXPECT_EQ(run_cfg(cfg, "--k-range 1:0").code, 2);
  cfg["params"]["n_max"] = 0;
  EXPECT_EQ(run_cfg(cfg).code, 2);
}

TEST_F(CliTest, BudgetExitsThree) {
  auto cfg = constant_rotation("analyze");
  cfg["params"]["max_iterations"] = 10;
  EXPECT_EQ(run_cfg(cfg).code, 3);
  EXPECT_EQ(json::parse(first_line(stderr_text()))["error"]["kind"], "budget");
}

TEST_F(CliTest, CacheHitMissAndCorruption) {
  const auto cfg = swap_system("optimize");
  ASSERT_EQ(run_cfg(cfg).code, 0);
  EXPECT_EQ(report()["provenance"]["cache"], "miss");
  const auto first = file("potential.csv");
  fs::remove_all(out());
  ASSERT_EQ(run_cfg(cfg).code, 0);
  EXPECT_EQ(report()["provenance"]["cache"], "hit");
  EXPECT_EQ(file("potential.csv"), first);
  ASSERT_EQ(run_cfg(cfg, "--n-max 51").code, 0);
  EXPECT_EQ(report()["provenance"]["cache"], "miss");

  const auto key = report()["provenance"]["config_sha256"].get<std::string>();
  std::ofstream(root_ / "cache" / (key + ".json")) << "{truncated";
  ASSERT_EQ(run_cfg(cfg, "--n-max 51").code, 0);
  const auto rep = report();
  EXPECT_EQ(rep["provenance"]["cache"], "miss");
  bool warned = false;
  for (const auto& w : rep["warnings"]) warned |= w.get<std::string>().find("corrupt cache") != std::string::npos;
  EXPECT_TRUE(warned);
  ASSERT_EQ(run_cfg(cfg, "--n-max 51 --no-cache").code, 0);
  EXPECT_EQ(report()["provenance"]["cache"], "miss");
}

TEST_F(CliTest, DeterministicReports) {
  auto cfg = strict_rotation("construct", 32);
  cfg["params"] = {{"k", 1}, {"t_samples", 51}, {"samples", 50}, {"seed", 11}};
  ASSERT_EQ(run_cfg(cfg, "--no-cache").code, 0);
  const auto a = file("report.json");
  ASSERT_EQ(run_cfg(cfg, "--no-cache").code, 0);
  EXPECT_EQ(file("report.json"), a);
}

// No shipped scenario is naturally inconclusive; a cached report flagged as such
// exercises the --strict-verdict path.
TEST_F(CliTest, StrictVerdictExitsFour) {
  const auto cfg = swap_system("analyze");
  ASSERT_EQ(run_cfg(cfg).code, 0);
  const auto key = report()["provenance"]["config_sha256"].get<std::string>();
  const auto path = root_ / "cache" / (key + ".json");
  json entry = json::parse(std::ifstream(path));
  entry["report"]["inconclusive"] = true;
  std::ofstream(path) << entry.dump();
  EXPECT_EQ(run_cfg(cfg).code, 0);
  EXPECT_EQ(run_cfg(cfg, "--strict-verdict").code, 4);
}

TEST(RunGuarded, MapsExceptionKinds) {
  std::ostringstream err;
  EXPECT_EQ(cli::run_guarded([]() -> int { throw DomainError("d"); }, err), 2);
  EXPECT_EQ(cli::run_guarded([]() -> int { throw NotFound("n"); }, err), 3);
  EXPECT_EQ(cli::run_guarded([]() -> int { throw std::runtime_error("x"); }, err), 1);
  EXPECT_EQ(cli::run_guarded([] { return 0; }, err), 0);
}
