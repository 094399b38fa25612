#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome bench(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + BENCH_PATH + "' " + args + " 2>&1";
  Outcome o;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return o;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) o.output.append(buf, n);
  const int status = ::pclose(p);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("imbalance_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string config(const std::string& name, const std::string& json) {
    std::ofstream(dir_ / name) << json;
    return "--config '" + (dir_ / name).string() + "'";
  }
  std::string out(const std::string& sub = "out") const { return "--out '" + (dir_ / sub).string() + "'"; }

  fs::path dir_;
};

const char* kOneCell = R"({"manifest": "demo", "context_sizes": [100], "imbalances": [0.2], "methods": ["Threshold"],
  "seeds": [0], "test_per_class": 100})";

}  // namespace

TEST_F(CliTest, ValidateShippedDemoManifest) {
  const auto o = bench(config("c.json", R"({"manifest": ")" + std::string(DEMO_MANIFEST_PATH) + R"("})") + " validate");
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_NE(o.output.find("dataset,n,pi1,features,rejected_rows"), std::string::npos);
  EXPECT_NE(o.output.find("two-gaussian-demo,2500,0.4,3,0"), std::string::npos) << o.output;
}

TEST_F(CliTest, RunOneCellWritesOneRow) {
  const auto o = bench(config("c.json", kOneCell) + " " + out() + " run");
  EXPECT_EQ(o.code, 0) << o.output;
  const auto results = slurp(dir_ / "out" / "results.csv");
  EXPECT_EQ(line_count(results), 2u) << results;
  EXPECT_NE(results.find("two-gaussian-demo,100,0.2,Threshold,0,100,"), std::string::npos) << results;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "table.md"));
  EXPECT_EQ(line_count(slurp(dir_ / "out" / "timings.csv")), 2u);
}

TEST_F(CliTest, ConfigErrorsExitOne) {
  auto o = bench(config("bad.json", R"({"context_sizes": [100], "bogus": 1})") + " " + out() + " run");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.output.find("bogus"), std::string::npos) << o.output;
  o = bench(config("broken.json", "{") + " validate");
  EXPECT_EQ(o.code, 1);
  o = bench("--config /nonexistent.json validate");
  EXPECT_EQ(o.code, 1);
  o = bench("--backend external validate");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.output.find("--sidecar-cmd"), std::string::npos) << o.output;
  o = bench("--backend svm validate");
  EXPECT_EQ(o.code, 1);
  o = bench("validate run");
  EXPECT_EQ(o.code, 1);
  o = bench("");
  EXPECT_EQ(o.code, 1);
  o = bench("--seeds 0 validate");
  EXPECT_EQ(o.code, 1);
}

TEST_F(CliTest, FailingCellsExitTwo) {
  const auto o = bench(config("c.json", kOneCell) + " " + out() + " --sidecar-cmd '" + FAKE_SIDECAR_PATH + " crash' run");
  EXPECT_EQ(o.code, 2) << o.output;
  EXPECT_NE(o.output.find("BackendFailure"), std::string::npos);
  EXPECT_NE(slurp(dir_ / "out" / "results.csv").find("BackendFailure"), std::string::npos);
}

TEST_F(CliTest, ExternalBackendRuns) {
  const auto o = bench(config("c.json", kOneCell) + " " + out() + " --backend external --sidecar-cmd '" +
                       FAKE_SIDECAR_PATH + " ok' run");
  EXPECT_EQ(o.code, 0) << o.output;
}

TEST_F(CliTest, RocAucFallsWithImbalance) {
  const auto o = bench(config("c.json", R"({"manifest": "demo", "seeds": [0], "test_per_class": 300,
    "roc": {"context_size": 400, "imbalances": [0.1, 0.5]}})") + " " + out() + " roc");
  ASSERT_EQ(o.code, 0) << o.output;
  EXPECT_TRUE(fs::exists(dir_ / "out" / "roc_two-gaussian-demo_pi0.1.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "out" / "roc_two-gaussian-demo_pi0.5.csv"));
  std::istringstream in(slurp(dir_ / "out" / "roc.csv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "dataset,pi1,auc");
  std::map<std::string, double> auc;
  while (std::getline(in, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    auc[line.substr(a + 1, b - a - 1)] = std::stod(line.substr(b + 1));
  }
  ASSERT_EQ(auc.size(), 2u);
  EXPECT_GT(auc["0.5"], auc["0.1"]);
}

TEST_F(CliTest, OutDirFromEnvironmentAndIdempotentOutputs) {
  const auto cfg = config("c.json", R"({"manifest": "demo", "seeds": [0], "test_per_class": 100,
    "threshold_sweep": {"context_size": 100, "pi1": 0.2},
    "downsample_sweep": {"minority_count": 20, "n0_targets": [20, 40, 80]},
    "calibration": {"context_size": 100, "imbalances": [0.2], "bins": 5},
    "roc": {"context_size": 100, "imbalances": [0.2]}})");
  const std::string env = "IMBALANCE_OUT_DIR='" + (dir_ / "env").string() + "'";
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    for (const char* sub : {"sweep-threshold", "sweep-downsample", "calibrate", "roc"}) {
      const auto o = bench(cfg + " " + sub, env);
      ASSERT_EQ(o.code, 0) << sub << ": " << o.output;
    }
    for (const auto& entry : fs::directory_iterator(dir_ / "env")) {
      const auto name = entry.path().filename().string();
      if (pass == 0) first[name] = slurp(entry.path());
      else EXPECT_EQ(first.at(name), slurp(entry.path())) << name;
    }
  }
  EXPECT_TRUE(first.count("sweep_threshold_two-gaussian-demo.csv"));
  EXPECT_EQ(line_count(first["sweep_threshold_two-gaussian-demo.csv"]), 102u);
  EXPECT_EQ(line_count(first["sweep_downsample_two-gaussian-demo.csv"]), 4u);
  EXPECT_TRUE(first.count("calibration_two-gaussian-demo_pi0.2.csv"));
  EXPECT_TRUE(first.count("calibration.csv"));
  EXPECT_TRUE(first.count("roc.csv"));
}

TEST_F(CliTest, SeedsFlagOverridesConfig) {
  const auto o = bench(config("c.json", kOneCell) + " " + out() + " --seeds 3 run");
  EXPECT_EQ(o.code, 0) << o.output;
  EXPECT_EQ(line_count(slurp(dir_ / "out" / "results.csv")), 4u);
}
