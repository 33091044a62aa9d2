#include "dial/synth.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

using dial::testing::slurp;
using dial::testing::TempDir;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DIAL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

class CliTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    data_ = new TempDir("clidata");
    dial::write_dataset(data_->str(), dial::generate_synthetic(dial::testing::small_synth()));
    dial::testing::write_file(data_->file("small.cfg"),
                              "loop.seed_pos = 16\nloop.seed_neg = 16\ncommittee.epochs = 20\n"
                              "matcher.epochs = 10\nencoder.hash_buckets = 4096\n");
  }
  static void TearDownTestSuite() {
    delete data_;
    data_ = nullptr;
  }

  std::string base() const { return "--data " + data_->str() + " --config " + data_->file("small.cfg"); }

  static TempDir* data_;
  TempDir out_{"cliout"};
};

TempDir* CliTest::data_ = nullptr;

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(CliTest, RunWritesOneMetricsLinePerRound) {
  ASSERT_EQ(run_cli("run " + base() + " --rounds 2 --budget 8 --out " + out_.file("a")), 0);
  const auto metrics = slurp(out_.file("a/metrics.jsonl"));
  EXPECT_EQ(lines(metrics), 2u);
  EXPECT_EQ(lines(slurp(out_.file("a/timings.jsonl"))), 2u);
  EXPECT_NE(metrics.find("\"recall_cand\""), std::string::npos);
}

TEST_F(CliTest, SameSeedSameMetrics) {
  ASSERT_EQ(run_cli("run " + base() + " --rounds 2 --budget 8 --seed 4 --out " + out_.file("a")), 0);
  ASSERT_EQ(run_cli("run " + base() + " --rounds 2 --budget 8 --seed 4 --out " + out_.file("b")), 0);
  EXPECT_EQ(slurp(out_.file("a/metrics.jsonl")), slurp(out_.file("b/metrics.jsonl")));
}

TEST_F(CliTest, EvalAndDumpAfterRun) {
  ASSERT_EQ(run_cli("run " + base() + " --rounds 1 --budget 8 --out " + out_.file("a")), 0);
  EXPECT_EQ(run_cli("eval --out " + out_.file("a")), 0);
  EXPECT_EQ(run_cli("dump-cand --out " + out_.file("a") + " --file " + out_.file("cand.csv")), 0);
  const auto cand = slurp(out_.file("cand.csv"));
  EXPECT_EQ(cand.rfind("r_id,s_id", 0), 0u);
  EXPECT_GT(lines(cand), 1u);
}

TEST_F(CliTest, ResumeFinishesRun) {
  ASSERT_EQ(run_cli("run " + base() + " --rounds 1 --budget 8 --out " + out_.file("a")), 0);
  ASSERT_EQ(run_cli("run " + base() + " --rounds 2 --budget 8 --resume --out " + out_.file("a")), 0);
  ASSERT_EQ(run_cli("run " + base() + " --rounds 2 --budget 8 --out " + out_.file("b")), 0);
  EXPECT_EQ(slurp(out_.file("a/metrics.jsonl")), slurp(out_.file("b/metrics.jsonl")));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("run --rounds 2"), 2);
  EXPECT_EQ(run_cli("run " + base() + " --no-such-flag"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  EXPECT_EQ(run_cli("run " + base() + " --strategy psychic --out " + out_.file("x")), 2);
  EXPECT_EQ(run_cli("run " + base() + " --set committee.size=0 --out " + out_.file("x")), 2);
  EXPECT_EQ(run_cli("run --data " + out_.file("missing") + " --out " + out_.file("x")), 3);
  EXPECT_EQ(run_cli("eval --out " + out_.file("never_ran")), 3);
}

TEST_F(CliTest, Synth) {
  ASSERT_EQ(run_cli("synth --out " + out_.file("s") + " --seed 3"), 0);
  auto ds = dial::load_dataset(out_.file("s"));
  EXPECT_EQ(ds.R.size(), dial::SynthConfig{}.n_r);
}
