#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nuacdm/nuacdm.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nuacdm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args) const {
    const std::string out = path("stdout.txt");
    const std::string cmd = std::string(NUACDM_CLI_PATH) + " " + args + " > " + out + " 2> " + path("stderr.txt");
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    return r;
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SpeedupUniform) {
  const CliRun r = run("speedup --r-list 1.0");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\n1.0,1.000000,"), std::string::npos) << r.out;
}

TEST_F(Cli, SpeedupSkewed) {
  const CliRun r = run("speedup --r-list 0.1");
  ASSERT_EQ(r.code, 0);
  const auto pos = r.out.find("\n0.1,");
  ASSERT_NE(pos, std::string::npos) << r.out;
  const double theory = std::stod(r.out.substr(pos + 5));
  EXPECT_NEAR(theory, 1.7379, 0.03 * 1.7379);
}

TEST_F(Cli, SolveIsDeterministic) {
  const std::string args = "solve --problem kaczmarz --algo nu-acdm --seed 7 --m 60 --n 20 --epochs 20 --trace-out ";
  ASSERT_EQ(run(args + path("a.csv")).code, 0);
  ASSERT_EQ(run(args + path("b.csv")).code, 0);
  const std::string a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  std::istringstream in(a);
  const auto traces = nuacdm::read_trace(in);
  ASSERT_EQ(traces.size(), 1u);
  EXPECT_EQ(traces[0].algo, "nu-acdm");
  EXPECT_EQ(traces[0].seed, 7u);
}

TEST_F(Cli, SolveToStdout) {
  const CliRun r = run("solve --problem ridge --algo rcdm --m 30 --n 5 --epochs 5");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.rfind(nuacdm::kTraceHeader, 0), 0u) << r.out;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("speedup --r-list 1.0 --bogus").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("solve --problem ridge --algo kaczmarz").code, 1);
}

TEST_F(Cli, MissingDataFile) {
  EXPECT_EQ(run("solve --problem ridge --algo nu-acdm --data " + path("missing.svm")).code, 3);
}

TEST_F(Cli, MalformedDataFile) {
  std::ofstream(path("bad.svm")) << "1 1:1\n1 x:2\n";
  EXPECT_EQ(run("solve --problem ridge --algo nu-acdm --data " + path("bad.svm")).code, 3);
}

TEST_F(Cli, GeneratedSystemIsReadable) {
  ASSERT_EQ(run("gen --kind linsys --m 40 --n 10 --r 0.1 --seed 3 --out " + path("sys.svm")).code, 0);
  const auto ds = nuacdm::parse_libsvm(path("sys.svm"));
  EXPECT_EQ(ds.features.rows(), 40);
  EXPECT_EQ(ds.features.cols(), 10);
  EXPECT_TRUE(fs::exists(path("sys.svm.xstar")));
  ASSERT_EQ(run("solve --problem kaczmarz --algo kaczmarz --epochs 5 --data " + path("sys.svm") +
                " --trace-out " + path("t.csv")).code,
            0);
}

TEST_F(Cli, BenchWritesOutputs) {
  ASSERT_EQ(run("bench --experiment kaczmarz-race --seeds 2 --m 40 --n 10 --r 0.1 --eps 1e-4 --out " + path("bench")).code, 0);
  EXPECT_TRUE(fs::exists(path("bench/kaczmarz-race_traces.csv")));
  const std::string summary = slurp(path("bench/summary.csv"));
  EXPECT_EQ(summary.rfind("experiment,algo,param,median_epochs_to_eps,theory_speedup\n", 0), 0u) << summary;
}

TEST_F(Cli, CheckSingleCriterion) {
  const CliRun r = run("check --only 6");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("[PASS]"), std::string::npos) << r.out;
}
