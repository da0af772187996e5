#include "reliab/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace reliab;
using namespace reliab::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("reliab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    unsetenv("RELIAB_OUTPUT_DIR");
    unsetenv("RELIAB_THREADS");
  }
  void TearDown() override {
    unsetenv("RELIAB_OUTPUT_DIR");
    unsetenv("RELIAB_THREADS");
    fs::remove_all(dir_);
  }

  std::string config(const std::string& text, const std::string& name = "config.json") {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int invoke(CommandLine cl) {
    out_.str("");
    err_.str("");
    return dispatch(cl, out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

CommandLine run_cmd(const std::string& cfg) { return {Command::Run, cfg, {}, {}, {}, {}}; }
CommandLine compare_cmd(const std::string& cfg) { return {Command::Compare, cfg, {}, {}, {}, {}}; }

const char* kWaartsMc = R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc", "n": 172000}, "seed": 5})";

}  // namespace

TEST_F(CliTest, WaartsMonteCarloRun) {
  auto cl = run_cmd(config(kWaartsMc));
  cl.output = path("out.json");
  ASSERT_EQ(invoke(cl), kExitOk) << err_.str();
  EXPECT_EQ(out_.str().rfind("mc: pf=", 0), 0u);
  EXPECT_NE(out_.str().find("calls=172000"), std::string::npos);
  const auto j = Json::parse(slurp(path("out.json")));
  EXPECT_EQ(j.at("schema"), kRunSchema);
  const auto r = reliability_result_from_json(j.at("result"));
  EXPECT_NEAR(r.pf, 2.26e-3, 0.3e-3);
  EXPECT_EQ(r.n_calls, 172000u);
}

TEST_F(CliTest, ByteIdenticalAcrossRunsAndThreadCounts) {
  const auto cfg = config(R"({"problem": {"benchmark": "waarts"}, "method": {"name": "ak", "n_pool": 20000, "n_final": 100000}, "seed": 2})");
  std::vector<std::string> outputs;
  for (unsigned t : {1u, 1u, 3u}) {
    auto cl = run_cmd(cfg);
    cl.threads = t;
    cl.output = path("ak_" + std::to_string(outputs.size()) + ".json");
    ASSERT_EQ(invoke(cl), kExitOk) << err_.str();
    outputs.push_back(slurp(*cl.output));
  }
  EXPECT_EQ(outputs[0], outputs[1]);
  EXPECT_EQ(outputs[0], outputs[2]);
  set_threads(0);
}

TEST_F(CliTest, SeedAndMethodOverrides) {
  const auto cfg = config(kWaartsMc);
  auto a = run_cmd(cfg);
  a.output = path("a.json");
  auto b = a;
  b.output = path("b.json");
  b.seed = 6;
  b.overrides = {"n=1000"};
  ASSERT_EQ(invoke(a), kExitOk);
  ASSERT_EQ(invoke(b), kExitOk);
  const auto ra = Json::parse(slurp(path("a.json")));
  const auto rb = Json::parse(slurp(path("b.json")));
  EXPECT_EQ(rb.at("seed"), 6);
  EXPECT_EQ(rb.at("result").at("n_calls"), 1000);
  EXPECT_NE(ra.at("result").at("pf"), rb.at("result").at("pf"));

  // --seed also replaces a seed given on the method.
  auto c = run_cmd(config(R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc", "n": 1000, "seed": 99}})", "c.json"));
  c.output = path("c.json.out");
  c.seed = 6;
  ASSERT_EQ(invoke(c), kExitOk);
  EXPECT_EQ(Json::parse(slurp(path("c.json.out"))).at("result"), rb.at("result"));
}

TEST_F(CliTest, CsvFormatAndOutputDirectoryFromEnvironment) {
  setenv("RELIAB_OUTPUT_DIR", path("outdir").c_str(), 1);
  auto cl = run_cmd(config(R"({"problem": {"benchmark": "linear", "beta0": 2, "dim": 3}, "method": {"name": "form"}, "output": {"path": "res.csv"}})"));
  ASSERT_EQ(invoke(cl), kExitOk) << err_.str();
  const auto csv = slurp(path("outdir/res.csv"));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), kResultCsvHeader);
  EXPECT_NE(csv.find("\nform,ok,0.02275013194817"), std::string::npos);
  EXPECT_NE(out_.str().find("cov=n/a"), std::string::npos);
}

TEST_F(CliTest, ValidationErrorsExitTwoWithoutOutput) {
  const std::vector<std::string> bad{
      "{not json",
      R"({"method": {"name": "mc"}})",
      R"({"problem": {"benchmark": "nowhere"}, "method": {"name": "mc"}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc", "n": 0}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc", "n": -5}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc", "samples": 10}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "annealing"}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "metais", "n_eps": 10}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "ak", "enrichment": "ef"}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "is", "center": [1, 2, 3]}})",
      R"({"problem": {"expression": "x1 - x4", "marginals": [{"family": "gaussian", "params": [0, 1]}]}, "method": {"name": "mc"}})",
      R"({"problem": {"expression": "x1 - (", "marginals": [{"family": "gaussian", "params": [0, 1]}]}, "method": {"name": "mc"}})",
      R"({"problem": {"expression": "x1", "marginals": [{"family": "gaussian", "params": [0, -1]}]}, "method": {"name": "mc"}})",
      R"({"problem": {"expression": "x1 - x2", "marginals": [{"family": "gaussian", "params": [0, 1]}, {"family": "gaussian", "params": [0, 1]}], "correlation": [[1, 2], [2, 1]]}, "method": {"name": "mc"}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc"}, "output": {"format": "xml"}})",
      R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc"}, "extra": 1})",
      R"({"problem": {"benchmark": "waarts"}, "methods": [{"name": "mc"}]})",
  };
  for (std::size_t i = 0; i < bad.size(); ++i) {
    auto cl = run_cmd(config(bad[i]));
    cl.output = path("never.json");
    EXPECT_EQ(invoke(cl), kExitValidation) << bad[i];
    EXPECT_FALSE(err_.str().empty());
    EXPECT_TRUE(out_.str().empty());
    EXPECT_FALSE(fs::exists(path("never.json")));
  }
  EXPECT_EQ(invoke(run_cmd(path("missing.json"))), kExitValidation);

  auto cl = run_cmd(config(kWaartsMc));
  cl.overrides = {"n"};
  EXPECT_EQ(invoke(cl), kExitValidation);
  cl.overrides = {"n=\"many\""};
  EXPECT_EQ(invoke(cl), kExitValidation);
  cl.overrides = {};
  setenv("RELIAB_THREADS", "zero", 1);
  EXPECT_EQ(invoke(cl), kExitValidation);
}

TEST_F(CliTest, ValidationPrecedesExecution) {
  // A valid first method must not run when a later one is invalid.
  auto cl = compare_cmd(config(R"({"problem": {"benchmark": "waarts"},
      "methods": [{"name": "mc", "n": 1000}, {"name": "pce", "p_max": 99}]})"));
  cl.output = path("t.csv");
  EXPECT_EQ(invoke(cl), kExitValidation);
  EXPECT_NE(err_.str().find("methods[1]: p_max"), std::string::npos) << err_.str();
  EXPECT_TRUE(out_.str().empty());
  EXPECT_FALSE(fs::exists(path("t.csv")));
}

TEST_F(CliTest, NumericalFailureExitsThree) {
  auto cl = run_cmd(config(R"({"problem": {"benchmark": "waarts"}, "method": {"name": "form", "max_iter": 1, "multistart": false}})"));
  EXPECT_EQ(invoke(cl), kExitNumerical);
  EXPECT_NE(err_.str().find("form failed"), std::string::npos);
}

TEST_F(CliTest, MetaIsReportsCostSplit) {
  auto cl = run_cmd(config(R"({"problem": {"benchmark": "linear", "beta0": 2, "dim": 2},
    "method": {"name": "metais", "n_pool": 20000, "n_eps": 20000, "trace_path": "trace.csv"}, "seed": 1})"));
  cl.output = path("mi.json");
  setenv("RELIAB_OUTPUT_DIR", dir_.c_str(), 1);
  ASSERT_EQ(invoke(cl), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find(" + 200"), std::string::npos) << out_.str();
  const auto j = Json::parse(slurp(path("mi.json")));
  const auto mi = metais_result_from_json(j.at("metais"));
  EXPECT_EQ(j.at("metais").at("cost"), std::to_string(mi.n_model_calls_doe) + " + 200");
  EXPECT_EQ(j.at("result").at("n_calls"), mi.n_model_calls_doe + 200);
  EXPECT_EQ(j.at("result").at("pf"), mi.pf);
  EXPECT_EQ(slurp(path("trace.csv")).rfind("iteration,n_design", 0), 0u);
}

TEST_F(CliTest, CompareTableMarksFailuresAndContinues) {
  auto cl = compare_cmd(config(R"({"problem": {"benchmark": "waarts"}, "seed": 4, "methods": [
      {"name": "mc", "n": 172000}, {"name": "form", "max_iter": 1, "multistart": false}, {"name": "cornell"}]})"));
  cl.output = path("table.csv");
  ASSERT_EQ(invoke(cl), kExitOk);
  const auto table = slurp(path("table.csv"));
  EXPECT_EQ(table, out_.str());
  std::istringstream rows(table);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(rows, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], kResultCsvHeader);
  EXPECT_EQ(lines[1].rfind("mc,ok,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("form,failed,", 0), 0u);
  // The two Waarts branches tie at the mean with opposite slopes.
  EXPECT_EQ(lines[3], "cornell,failed,,,,,,cornell_index: linearized variance is zero");

  ASSERT_EQ(invoke(cl), kExitOk);
  EXPECT_EQ(slurp(path("table.csv")), table);
}

TEST_F(CliTest, CompareAllFailedOrEmpty) {
  auto all = compare_cmd(config(R"({"problem": {"benchmark": "waarts"}, "methods": [{"name": "form", "max_iter": 1, "multistart": false}]})"));
  EXPECT_EQ(invoke(all), kExitNumerical);
  EXPECT_EQ(invoke(compare_cmd(config(R"({"problem": {"benchmark": "waarts"}, "methods": []})"))), kExitValidation);
  EXPECT_EQ(invoke(compare_cmd(config(R"({"problem": {"benchmark": "waarts"}, "method": {"name": "mc"}})"))), kExitValidation);
  auto json_out = compare_cmd(config(R"({"problem": {"benchmark": "waarts"}, "methods": [{"name": "mc"}]})"));
  json_out.output = path("t.json");
  EXPECT_EQ(invoke(json_out), kExitValidation);
}

TEST_F(CliTest, OverrideAppliesToMethodsThatAcceptIt) {
  auto cl = compare_cmd(config(R"({"problem": {"benchmark": "waarts"}, "methods": [{"name": "mc"}, {"name": "cornell"}]})"));
  cl.overrides = {"n=500"};
  ASSERT_EQ(invoke(cl), kExitOk);
  EXPECT_NE(out_.str().find("\nmc,ok,"), std::string::npos);
  EXPECT_NE(out_.str().find(",500,500,"), std::string::npos);
  cl.overrides = {"n_corr=5"};
  EXPECT_EQ(invoke(cl), kExitValidation);
}

TEST_F(CliTest, BetaSweepIsMonotone) {
  auto cl = compare_cmd(config(R"({"problem": {"benchmark": "linear", "dim": 2}, "seed": 9,
      "methods": [{"name": "form"}, {"name": "mc", "n": 200000}],
      "sweep": {"parameter": "beta0", "values": [-1, 0, 0.5, 1, 2, 3]}})"));
  ASSERT_EQ(invoke(cl), kExitOk) << err_.str();
  std::istringstream rows(out_.str());
  std::string line;
  std::getline(rows, line);
  EXPECT_EQ(line, std::string("beta0,") + kResultCsvHeader);
  std::map<std::string, std::vector<std::pair<double, double>>> by_method;
  while (std::getline(rows, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    by_method[f[1]].emplace_back(std::stod(f[0]), std::stod(f[4]));
  }
  for (const auto& [m, pts] : by_method) {
    ASSERT_EQ(pts.size(), 6u) << m;
    for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_GT(pts[i].second, pts[i - 1].second) << m;
  }
  for (const auto& [b0, beta] : by_method["form"]) EXPECT_NEAR(beta, b0, 1e-6);
  auto bad = compare_cmd(config(R"({"problem": {"benchmark": "waarts"}, "methods": [{"name": "form"}], "sweep": {"values": [1]}})", "b.json"));
  EXPECT_EQ(invoke(bad), kExitValidation);
}

TEST_F(CliTest, ExpressionProblemWithCorrelation) {
  auto cl = compare_cmd(config(R"({"problem": {"expression": "x1 - x2",
      "marginals": [{"family": "gaussian", "params": [5, 1]}, {"family": "gaussian", "params": [2, 1]}],
      "correlation": [[1, 0.5], [0.5, 1]]}, "methods": [{"name": "form"}, {"name": "cornell"}]})"));
  ASSERT_EQ(invoke(cl), kExitOk) << err_.str();
  // R - S with unit variances and correlation 0.5: beta = 3 / sqrt(1).
  std::istringstream rows(out_.str());
  std::string line;
  std::getline(rows, line);
  int n = 0;
  while (std::getline(rows, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    EXPECT_EQ(f[1], "ok");
    EXPECT_NEAR(std::stod(f[3]), 3.0, 1e-9) << line;
    ++n;
  }
  EXPECT_EQ(n, 2);
}

TEST(CliBinary, ExitCodes) {
  const std::string bin = RELIAB_CLI_PATH;
  auto code = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  EXPECT_EQ(code(bin + " --help"), 0);
  EXPECT_EQ(code(bin), kExitValidation);
  EXPECT_EQ(code(bin + " run"), kExitValidation);
  EXPECT_EQ(code(bin + " run --config /nonexistent.json"), kExitValidation);
  EXPECT_EQ(code(bin + " run --config x.json --threads many"), kExitValidation);
  const auto cfg = fs::temp_directory_path() / "reliab_cli_binary.json";
  std::ofstream(cfg) << kWaartsMc;
  EXPECT_EQ(code(bin + " run --config " + cfg.string() + " --seed 3 --method-override n=2000"), 0);
  fs::remove(cfg);
}
