#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "bacl/config.h"
#include "commands.h"
#include "json.hpp"

namespace bacl {
namespace {

namespace fs = std::filesystem;

TEST(Config, ParsesKeysCommentsAndLists) {
  std::istringstream in(
      "# desk run\n"
      "fcbl.alpha = 0.5   # margin scale\n"
      "\n"
      "indicator.kind = tpr\n"
      "optim.decay_epochs = 2, 5\n"
      "train.use_fhm = false\n");
  const RunConfig c = ParseConfig(in);
  EXPECT_EQ(c.train.hp.alpha, 0.5);
  EXPECT_EQ(c.train.hp.indicator_kind, IndicatorKind::kTpr);
  EXPECT_EQ(c.train.hp.lr.decay_epochs, (std::vector<int>{2, 5}));
  EXPECT_FALSE(c.train.use_fhm);
  EXPECT_EQ(c.task.num_classes, 30);
}

TEST(Config, ErrorsNameKeyOrLine) {
  std::istringstream unknown("fcbl.beta = 1\n");
  try {
    ParseConfig(unknown);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("fcbl.beta"), std::string::npos);
  }
  std::istringstream bad_value("fhm.c = many\n");
  try {
    ParseConfig(bad_value);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("fhm.c"), std::string::npos);
  }
  std::istringstream no_eq("\n\nfcbl.alpha 3\n");
  try {
    ParseConfig(no_eq);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Config, WriteThenParseRoundTrips) {
  RunConfig c = DefaultRunConfig();
  c.train.hp.beta = 0.123456789012345;
  c.task.class_sep = 1.7;
  std::ostringstream out;
  WriteConfig(c, out);
  std::istringstream in(out.str());
  const RunConfig back = ParseConfig(in, RunConfig{});
  EXPECT_EQ(ConfigEntries(back), ConfigEntries(c));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("bacl-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::ofstream cfg(root_ / "small.cfg");
    cfg << "task.num_classes = 5\ntask.feature_dim = 6\ntask.max_count = 200\n"
           "task.power = 2.3\ntask.background_count = 100\ntask.test_per_class = 10\n"
           "task.test_background = 20\ntrain.epochs_stage1 = 2\ntrain.epochs_stage2 = 2\n"
           "train.batch_size = 64\nfhm.c = 3\n";
  }
  void TearDown() override { fs::remove_all(root_); }

  int Run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::Run(args, out_, err_);
  }
  std::string Slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string Cfg() const { return (root_ / "small.cfg").string(); }
  std::string Dir(const std::string& name) const { return (root_ / name).string(); }

  fs::path root_;
  std::ostringstream out_, err_;
};

TEST_F(CliTest, GenWritesArtifactsDeterministically) {
  ASSERT_EQ(Run({"gen", "--config", Cfg(), "--seed", "4", "--out", Dir("a")}), 0) << err_.str();
  ASSERT_EQ(Run({"gen", "--config", Cfg(), "--seed", "4", "--out", Dir("b")}), 0);
  for (const char* f : {"dataset.txt", "groups.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(root_ / "a" / f)) << f;
  }
  EXPECT_EQ(cli::FileChecksum(Dir("a") + "/dataset.txt"),
            cli::FileChecksum(Dir("b") + "/dataset.txt"));
  const auto m = nlohmann::json::parse(Slurp(root_ / "a" / "manifest.json"));
  EXPECT_EQ(m["subcommand"], "gen");
  EXPECT_EQ(m["seed"], 4);
  EXPECT_EQ(m["config"]["task.num_classes"], "5");
  EXPECT_EQ(m["artifacts"]["dataset.txt"], cli::FileChecksum(Dir("a") + "/dataset.txt"));
}

TEST_F(CliTest, InvalidConfigKeyIsSingleLineError) {
  std::ofstream(root_ / "bad.cfg") << "fcbl.gamma = 3\n";
  EXPECT_NE(Run({"gen", "--config", Dir("bad.cfg"), "--out", Dir("x")}), 0);
  const std::string e = err_.str();
  EXPECT_EQ(e.rfind("error: ", 0), 0u);
  EXPECT_NE(e.find("fcbl.gamma"), std::string::npos);
  EXPECT_EQ(std::count(e.begin(), e.end(), '\n'), 1);
}

TEST_F(CliTest, MissingConfigAndUnknownFlagFail) {
  EXPECT_NE(Run({"gen", "--config", Dir("nope.cfg"), "--out", Dir("x")}), 0);
  EXPECT_EQ(err_.str().rfind("error: ", 0), 0u);
  EXPECT_NE(Run({"train", "--out", Dir("x"), "--bogus"}), 0);
  EXPECT_EQ(err_.str().rfind("error: ", 0), 0u);
  EXPECT_NE(Run({}), 0);
}

TEST_F(CliTest, StageTwoWithoutCheckpointIsExplicitError) {
  EXPECT_NE(Run({"train", "--config", Cfg(), "--stage", "2", "--out", Dir("s2")}), 0);
  EXPECT_NE(err_.str().find("checkpoint"), std::string::npos);
  EXPECT_NE(Run({"train", "--config", Cfg(), "--mode", "baseline_ce", "--stage", "2",
                 "--checkpoint", Cfg(), "--out", Dir("s2")}),
            0);
}

TEST_F(CliTest, PipelineTrainEvalReport) {
  ASSERT_EQ(Run({"train", "--config", Cfg(), "--mode", "baseline_ce", "--out", Dir("base")}), 0)
      << err_.str();
  ASSERT_EQ(Run({"train", "--config", Cfg(), "--out", Dir("s1")}), 0) << err_.str();
  ASSERT_EQ(Run({"train", "--config", Cfg(), "--stage", "2", "--checkpoint",
                 Dir("s1") + "/checkpoint.txt", "--no-margin", "--no-weight-term", "--out",
                 Dir("fhm")}),
            0)
      << err_.str();
  ASSERT_EQ(Run({"train", "--config", Cfg(), "--stage", "2", "--checkpoint",
                 Dir("s1") + "/checkpoint.txt", "--indicator", "tpr", "--out", Dir("bacl")}),
            0)
      << err_.str();
  for (const char* f : {"checkpoint.txt", "runlog.csv", "summary.json", "manifest.json",
                        "indicators.csv", "confusion_soft.csv", "norms.csv", "balance.json"}) {
    EXPECT_TRUE(fs::exists(root_ / "bacl" / f)) << f;
  }
  const auto summary = nlohmann::json::parse(Slurp(root_ / "fhm" / "summary.json"));
  EXPECT_EQ(summary["label"], "bacl-s2-confusion_soft-no_margin-no_weight_term");
  EXPECT_TRUE(summary.contains("wall_time_s"));
  EXPECT_EQ(nlohmann::json::parse(Slurp(root_ / "bacl" / "summary.json"))["label"],
            "bacl-s2-tpr");
  EXPECT_EQ(Slurp(root_ / "base" / "runlog.csv").substr(0, 63),
            "epoch,loss,acc_overall,acc_rare,acc_common,acc_frequent,norm_cv");

  ASSERT_EQ(Run({"eval", "--config", Cfg(), "--checkpoint", Dir("bacl") + "/checkpoint.txt",
                 "--out", Dir("ev")}),
            0)
      << err_.str();
  EXPECT_EQ(Slurp(root_ / "ev" / "eval.csv").substr(0, 26), "class,count,group,accuracy");

  ASSERT_EQ(Run({"report", Dir("base"), Dir("bacl"), "--out", Dir("rep")}), 0) << err_.str();
  const std::string fin = Slurp(root_ / "rep" / "final.csv");
  EXPECT_NE(fin.find("baseline_ce-s1,"), std::string::npos);
  EXPECT_NE(fin.find("bacl-s2-tpr,"), std::string::npos);
  EXPECT_NE(fin.find("delta_rare"), std::string::npos);
}

TEST_F(CliTest, ReportRejectsIncompatibleRuns) {
  ASSERT_EQ(Run({"train", "--config", Cfg(), "--out", Dir("a")}), 0) << err_.str();
  ASSERT_EQ(Run({"train", "--config", Cfg(), "--set", "task.num_classes=4", "--out", Dir("b")}),
            0)
      << err_.str();
  EXPECT_NE(Run({"report", Dir("a"), Dir("b"), "--out", Dir("rep")}), 0);
  EXPECT_NE(err_.str().find("classes"), std::string::npos);
}

TEST_F(CliTest, ManifestReproducesRun) {
  ASSERT_EQ(Run({"train", "--config", Cfg(), "--seed", "9", "--set", "fcbl.alpha=0.5", "--out",
                 Dir("a")}),
            0);
  const auto m = nlohmann::json::parse(Slurp(root_ / "a" / "manifest.json"));
  ASSERT_EQ(Run({"train", "--config", Dir("a") + "/" + m["resolved_config"].get<std::string>(),
                 "--seed", std::to_string(m["seed"].get<int>()), "--out", Dir("b")}),
            0);
  EXPECT_EQ(Slurp(root_ / "a" / "runlog.csv"), Slurp(root_ / "b" / "runlog.csv"));
  EXPECT_EQ(Slurp(root_ / "a" / "norms.csv"), Slurp(root_ / "b" / "norms.csv"));
}

}  // namespace
}  // namespace bacl
