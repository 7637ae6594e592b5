#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("spdnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) const {
    const std::string cmd = std::string(SPDNET_CLI_PATH) + " " + args + " > " +
                            (dir_ / "stdout").string() + " 2> " + (dir_ / "stderr").string();
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(dir_ / "stdout"), slurp(dir_ / "stderr")};
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static int count_lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
  }

  static constexpr const char* kData =
      "--synthetic --classes 4 --train-per-class 6 --test-per-class 3 --threads 2";
  // A reduced network so training runs take a few seconds.
  static constexpr const char* kSmall =
      "--synthetic --classes 4 --train-per-class 6 --test-per-class 3 --threads 2 --seq-len 24 "
      "--channels 4 --levels 2 --spat-dim 10";

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, MissingSubcommandIsConfigError) { EXPECT_EQ(run("").status, 2); }

TEST_F(Cli, UnknownFlagIsConfigError) { EXPECT_EQ(run("train --bogus").status, 2); }

TEST_F(Cli, MissingDatasetPathNamesTheFlag) {
  const RunResult r = run("train --dhg-root " + path("absent") + " --out " + path("o"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("--dhg-root"), std::string::npos);
  EXPECT_EQ(count_lines(r.err), 1);
  const RunResult t = run("train --train-data " + path("absent.spds") + " --out " + path("o"));
  EXPECT_EQ(t.status, 2);
  EXPECT_NE(t.err.find("--train-data"), std::string::npos);
}

TEST_F(Cli, NoDataSourceIsConfigError) {
  const RunResult r = run("train --out " + path("o"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("--synthetic"), std::string::npos);
}

TEST_F(Cli, BadNetworkConfigIsConfigError) {
  EXPECT_EQ(run(std::string("train ") + kSmall + " --spat-dim 500 --out " + path("o")).status, 2);
  EXPECT_EQ(run("train --synthetic --classes 12 --out " + path("o")).status, 2);
}

TEST_F(Cli, SyntheticTrainWritesCheckpointAndMetrics) {
  const RunResult r = run("train --synthetic --classes 4 --epochs 5 --seed 7 --out " + path("run"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("run/checkpoint_final.spdn")));
  EXPECT_FALSE(fs::exists(path("run/checkpoint_epoch20.spdn")));
  const std::string csv = slurp(path("run/metrics.csv"));
  EXPECT_EQ(count_lines(csv), 6);
  EXPECT_EQ(csv.rfind("epoch,mean_loss,train_accuracy,wall_seconds\n", 0), 0u);
}

TEST_F(Cli, SeededRerunGivesIdenticalOutputs) {
  const std::string common = std::string("train ") + kSmall + " --epochs 3 --seed 5 --out ";
  ASSERT_EQ(run(common + path("a")).status, 0);
  ASSERT_EQ(run(common + path("b") + " --threads 1").status, 0);
  auto without_time = [](const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  EXPECT_EQ(without_time(slurp(path("a/metrics.csv"))), without_time(slurp(path("b/metrics.csv"))));
  EXPECT_EQ(slurp(path("a/checkpoint_final.spdn")), slurp(path("b/checkpoint_final.spdn")));
}

TEST_F(Cli, ConfigFileIsOverriddenByFlags) {
  {
    std::ofstream cfg(path("run.cfg"));
    cfg << "[train]\nepochs = 2\nbatch_size = 8\n[output]\ndir = " << path("from_config") << "\n";
  }
  const RunResult r =
      run(std::string("train ") + kSmall + " --config " + path("run.cfg") + " --epochs 1");
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(count_lines(slurp(path("from_config/metrics.csv"))), 2);

  {
    std::ofstream cfg(path("bad.cfg"));
    cfg << "[train]\nwarmup = 3\n";
  }
  EXPECT_EQ(run(std::string("train ") + kSmall + " --config " + path("bad.cfg")).status, 2);
  EXPECT_EQ(run(std::string("train ") + kSmall + " --config " + path("absent.cfg")).status, 2);
}

TEST_F(Cli, PipelineProducesReportAndConfusion) {
  ASSERT_EQ(run(std::string("train ") + kSmall + " --epochs 2 --out " + path("p")).status, 0);
  const RunResult r = run(std::string("pipeline ") + kData + " --checkpoint " +
                          path("p/checkpoint_final.spdn") + " --out " + path("p"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy:"), std::string::npos);
  for (const char* f : {"features_train.spft", "features_test.spft", "svm_model.spsv", "report.csv",
                        "confusion.csv"})
    EXPECT_TRUE(fs::exists(path(std::string("p/") + f))) << f;
  const std::string confusion = slurp(path("p/confusion.csv"));
  EXPECT_EQ(count_lines(confusion), 5);
  EXPECT_EQ(confusion.rfind("true\\predicted,class_1,class_2,class_3,class_4\n", 0), 0u);

  // The separate steps reproduce the pipeline's model byte for byte.
  ASSERT_EQ(run("svm --classes 4 --features " + path("p/features_train.spft") + " --out " + path("s"))
                .status,
            0);
  EXPECT_EQ(slurp(path("s/svm_model.spsv")), slurp(path("p/svm_model.spsv")));
  const RunResult e = run("eval --model " + path("s/svm_model.spsv") + " --features " +
                          path("p/features_test.spft") + " --out " + path("s"));
  ASSERT_EQ(e.status, 0) << e.err;
  EXPECT_EQ(slurp(path("s/confusion.csv")), confusion);
}

TEST_F(Cli, CheckpointClassMismatchNamesBothCounts) {
  ASSERT_EQ(run(std::string("train ") + kSmall + " --epochs 1 --out " + path("m")).status, 0);
  const RunResult r = run("extract --synthetic --classes 3 --checkpoint " +
                          path("m/checkpoint_final.spdn") + " --out " + path("m"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.err.find("4 classes"), std::string::npos);
  EXPECT_NE(r.err.find("3"), std::string::npos);
  EXPECT_EQ(run("extract --synthetic --checkpoint " + path("absent.spdn")).status, 2);
}

TEST_F(Cli, SynthWritesDatasetCaches) {
  const RunResult r = run("synth --classes 3 --train-per-class 2 --test-per-class 1 --out " + path("d"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("d/synthetic_train.spds")));
  EXPECT_TRUE(fs::exists(path("d/synthetic_test.spds")));
  const RunResult t = run("train --train-data " + path("d/synthetic_train.spds") +
                          " --mode 14 --seq-len 24 --channels 3 --levels 2 --spat-dim 6 --epochs 1 --out " +
                          path("d"));
  EXPECT_EQ(t.status, 0) << t.err;
}

TEST_F(Cli, GradcheckTableAndExitStatus) {
  const RunResult all = run("gradcheck");
  EXPECT_EQ(all.status, 0);
  EXPECT_EQ(count_lines(all.out), 10);
  EXPECT_EQ(all.out.find("FAIL"), std::string::npos);

  const RunResult one = run("gradcheck --layer re_eig");
  EXPECT_EQ(one.status, 0);
  EXPECT_EQ(count_lines(one.out), 2);
  EXPECT_NE(one.out.find("re_eig"), std::string::npos);

  const RunResult bad = run("gradcheck --layer log_eig --corrupt-gradient");
  EXPECT_EQ(bad.status, 1);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);

  EXPECT_EQ(run("gradcheck --layer nonsense").status, 2);
}
